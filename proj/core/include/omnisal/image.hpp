#ifndef OMNISAL_IMAGE_HPP
#define OMNISAL_IMAGE_HPP

#include <string>

#include "omnisal/tensor.hpp"

namespace omnisal {

/// Equirectangular raster: 1 or 3 channels, width exactly twice the height,
/// values in [0, 1].
class EquirectImage {
public:
    explicit EquirectImage(Tensor pixels);

    const Tensor& pixels() const { return pixels_; }
    int channels() const { return pixels_.channels(); }
    int height() const { return pixels_.height(); }
    int width() const { return pixels_.width(); }

private:
    Tensor pixels_;
};

// PNG I/O, 8-bit gray or RGB, values mapped linearly to [0, 1].
Tensor read_png(const std::string& path);
void write_png(const std::string& path, const Tensor& t);

// Binary PGM (P5), grayscale only.
Tensor read_pgm(const std::string& path);
void write_pgm(const std::string& path, const Tensor& t);

/// Dispatch on extension (.png / .pgm).
Tensor read_image(const std::string& path);
void write_image(const std::string& path, const Tensor& t);

} // namespace omnisal

#endif
