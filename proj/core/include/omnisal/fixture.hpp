#ifndef OMNISAL_FIXTURE_HPP
#define OMNISAL_FIXTURE_HPP

#include <iosfwd>
#include <string>

#include "omnisal/tensor.hpp"

namespace omnisal {

// OMT1 tensor fixture: magic "OMT1", then C, H, W as 32-bit little-endian
// unsigned ints, then C*H*W 32-bit little-endian IEEE-754 floats, row-major
// within each channel, channels outermost.

void write_omt1(std::ostream& out, const Tensor& t);
void write_omt1_file(const std::string& path, const Tensor& t);

Tensor read_omt1(std::istream& in);
Tensor read_omt1_file(const std::string& path);

/// Deterministic band-limited test image: channels are low-order direction
/// polynomials evaluated on the sphere, values inside [0, 1].
Tensor smooth_ep_fixture(int heq, int channels);

/// Deterministic test image with localized blobs placed off-axis, several of
/// them straddling cube-face borders so the four unfoldings genuinely see
/// different content. Values inside [0, 1].
Tensor textured_ep_fixture(int heq, int channels);

} // namespace omnisal

#endif
