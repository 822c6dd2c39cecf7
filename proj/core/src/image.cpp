#include "omnisal/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <vector>

#include <png.h>

namespace omnisal {

namespace {

unsigned char to_byte(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<unsigned char>(std::lround(c * 255.0f));
}

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f)
            std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

} // namespace

EquirectImage::EquirectImage(Tensor pixels) : pixels_(std::move(pixels)) {
    if (pixels_.channels() != 1 && pixels_.channels() != 3)
        throw std::invalid_argument("EquirectImage: channels must be 1 or 3");
    if (pixels_.width() != 2 * pixels_.height())
        throw std::invalid_argument("EquirectImage: width must equal 2 * height");
    for (float v : pixels_.values())
        if (!(v >= 0.0f && v <= 1.0f))
            throw std::invalid_argument("EquirectImage: pixel values must lie in [0, 1]");
}

Tensor read_png(const std::string& path) {
    FilePtr fp(std::fopen(path.c_str(), "rb"));
    if (!fp)
        throw std::runtime_error("cannot open for read: " + path);

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error("PNG decode failed: " + path);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = 0, h = 0;
    int bit_depth = 0, color_type = 0;
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    // Normalize everything to 8-bit gray or RGB.
    if (color_type == PNG_COLOR_TYPE_PALETTE)
        png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(png);
    if (bit_depth == 16)
        png_set_strip_16(png);
    if (color_type & PNG_COLOR_MASK_ALPHA)
        png_set_strip_alpha(png);
    png_read_update_info(png, info);
    png_get_IHDR(png, info, &w, &h, &bit_depth, &color_type, nullptr, nullptr, nullptr);

    const int channels = (color_type == PNG_COLOR_TYPE_GRAY) ? 1 : 3;
    std::vector<unsigned char> row(static_cast<std::size_t>(w) * channels);
    Tensor t(channels, static_cast<int>(h), static_cast<int>(w));
    for (png_uint_32 y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (png_uint_32 x = 0; x < w; ++x)
            for (int c = 0; c < channels; ++c)
                t.at(c, static_cast<int>(y), static_cast<int>(x)) =
                    static_cast<float>(row[static_cast<std::size_t>(x) * channels + c]) / 255.0f;
    }
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return t;
}

void write_png(const std::string& path, const Tensor& t) {
    if (t.channels() != 1 && t.channels() != 3)
        throw std::invalid_argument("write_png: channels must be 1 or 3");
    FilePtr fp(std::fopen(path.c_str(), "wb"));
    if (!fp)
        throw std::runtime_error("cannot open for write: " + path);

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng init failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG encode failed: " + path);
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(t.width()), static_cast<png_uint_32>(t.height()),
                 8, t.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);

    std::vector<unsigned char> row(static_cast<std::size_t>(t.width()) * t.channels());
    for (int y = 0; y < t.height(); ++y) {
        for (int x = 0; x < t.width(); ++x)
            for (int c = 0; c < t.channels(); ++c)
                row[static_cast<std::size_t>(x) * t.channels() + c] = to_byte(t.at(c, y, x));
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

Tensor read_pgm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for read: " + path);
    std::string magic;
    f >> magic;
    if (magic != "P5")
        throw std::runtime_error("PGM: expected P5 in " + path);
    auto next_token = [&f]() {
        std::string tok;
        for (;;) {
            f >> tok;
            if (!f)
                throw std::runtime_error("PGM: truncated header");
            if (tok[0] == '#') {
                std::string rest;
                std::getline(f, rest);
                continue;
            }
            return tok;
        }
    };
    const int w = std::stoi(next_token());
    const int h = std::stoi(next_token());
    const int maxv = std::stoi(next_token());
    if (w <= 0 || h <= 0 || maxv <= 0 || maxv > 255)
        throw std::runtime_error("PGM: unsupported header in " + path);
    f.get(); // single whitespace before payload
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h);
    f.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f)
        throw std::runtime_error("PGM: truncated payload in " + path);
    Tensor t(1, h, w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            t.at(0, y, x) = static_cast<float>(buf[static_cast<std::size_t>(y) * w + x]) /
                            static_cast<float>(maxv);
    return t;
}

void write_pgm(const std::string& path, const Tensor& t) {
    if (t.channels() != 1)
        throw std::invalid_argument("write_pgm: grayscale only");
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for write: " + path);
    f << "P5\n" << t.width() << " " << t.height() << "\n255\n";
    std::vector<unsigned char> buf(static_cast<std::size_t>(t.width()) * t.height());
    for (int y = 0; y < t.height(); ++y)
        for (int x = 0; x < t.width(); ++x)
            buf[static_cast<std::size_t>(y) * t.width() + x] = to_byte(t.at(0, y, x));
    f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!f)
        throw std::runtime_error("PGM write failed: " + path);
}

namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

} // namespace

Tensor read_image(const std::string& path) {
    if (ends_with(path, ".pgm"))
        return read_pgm(path);
    if (ends_with(path, ".png"))
        return read_png(path);
    throw std::runtime_error("unsupported image extension: " + path);
}

void write_image(const std::string& path, const Tensor& t) {
    if (ends_with(path, ".pgm")) {
        write_pgm(path, t);
        return;
    }
    if (ends_with(path, ".png")) {
        write_png(path, t);
        return;
    }
    throw std::runtime_error("unsupported image extension: " + path);
}

} // namespace omnisal
