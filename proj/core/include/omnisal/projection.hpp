#ifndef OMNISAL_PROJECTION_HPP
#define OMNISAL_PROJECTION_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "omnisal/tensor.hpp"

namespace omnisal {

// Sphere/raster conventions used throughout:
//   right-handed axes, +x through face F, +y through R, +z through T;
//   longitude lambda in [-pi, pi) measured from +x toward +y;
//   latitude phi in [-pi/2, pi/2], positive toward +z;
//   EP column 0 at lambda = -pi, row 0 at phi = +pi/2;
//   pixel centers at half-integer offsets.
// EP sampling wraps horizontally and clamps vertically.

enum class Face : int { F = 0, B = 1, L = 2, R = 3, T = 4, D = 5 };

constexpr int kFaceCount = 6;

const char* face_name(Face f);
Face face_from_name(const std::string& name);

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;
};

Vec3 normalize(const Vec3& v);
double dot(const Vec3& a, const Vec3& b);
/// Angle between two unit vectors, radians.
double angle_between(const Vec3& a, const Vec3& b);

/// Orthonormal frame of one cube face: outward axis plus the in-plane
/// directions of increasing u (columns) and v (rows).
struct FaceFrame {
    Vec3 axis, u, v;
};

const FaceFrame& face_frame(Face f);

/// Direction of the face point (u, v) in [-1, 1]^2.
Vec3 face_point_to_direction(Face f, double u, double v);

/// Face owning a direction (largest dot with the face axis; ties resolved in
/// face order F, B, L, R, T, D) and the in-plane coordinates on that face.
struct FaceCoords {
    Face face;
    double u, v;
};
FaceCoords direction_to_face_coords(const Vec3& d);

Vec3 latlon_to_direction(double lambda, double phi);
void direction_to_latlon(const Vec3& d, double& lambda, double& phi);

/// One bilinear fetch: four source indices into a plane plus their convex
/// weights. `face` selects the source raster when sampling a cube, and is
/// kNoFace when the source is a single raster.
struct GridSample {
    static constexpr std::uint8_t kNoFace = 255;
    std::uint8_t face = kNoFace;
    std::uint32_t idx[4] = {0, 0, 0, 0};
    float weight[4] = {0.f, 0.f, 0.f, 0.f};
};

/// Precomputed remap: per destination pixel (row-major) the source fetch.
/// Building a grid once and re-applying it is bit-stable.
struct SamplingGrid {
    int dst_height = 0, dst_width = 0;
    int src_height = 0, src_width = 0;
    std::vector<GridSample> samples;
};

// OMG1 grid cache format (all multi-byte fields little-endian):
//   bytes 0-3   magic "OMG1"
//   u32         dst_height, dst_width, src_height, src_width
//   then dst_height*dst_width records, one per destination pixel, row-major:
//     u8        source face index (0..5), or 255 for a single-raster source
//     u32 x 4   source pixel indices (row-major into the source plane)
//     f32 x 4   bilinear weights (nonnegative, sum to 1)
void write_omg1(std::ostream& out, const SamplingGrid& g);
void write_omg1_file(const std::string& path, const SamplingGrid& g);
SamplingGrid read_omg1(std::istream& in);
SamplingGrid read_omg1_file(const std::string& path);

/// Six equal square rasters, one per cube face, all (C, side, side).
struct CubeFaceSet {
    int side = 0;
    std::array<Tensor, 6> faces;

    Tensor& operator[](Face f) { return faces[static_cast<std::size_t>(f)]; }
    const Tensor& operator[](Face f) const { return faces[static_cast<std::size_t>(f)]; }
};

/// Grids mapping an EP raster of height heq onto each face (gnomonic per
/// face, bilinear in the EP source).
std::array<SamplingGrid, 6> build_ep_to_cube_grid(int heq, int side);

/// Grid mapping a face set of the given side onto an EP raster of height
/// heq_out. Each destination pixel samples its owning face only, clamped at
/// the face border.
SamplingGrid build_cube_to_ep_grid(int side, int heq_out);

/// Applies a grid whose source is a single raster.
Tensor apply_grid(const SamplingGrid& g, const Tensor& src);
/// Applies a grid whose samples carry face labels.
Tensor apply_grid(const SamplingGrid& g, const CubeFaceSet& src);

CubeFaceSet ep_to_cube(const Tensor& ep, int side);
Tensor cube_to_ep(const CubeFaceSet& faces, int heq_out);

/// 4-3 unfolding recipe. The horizontal strip is the equatorial ring in
/// eastward order with the center at slot 1; the vertical strip is
/// [T, center, D] with T/D rotated so their seams with the center face are
/// continuous.
struct UnfoldingLayout {
    Face center;
    std::array<Face, 4> horizontal; // west neighbor, center, east neighbor, antipode
    std::array<Face, 3> vertical;   // T, center, D
    int top_turns_cw = 0;           // quarter turns applied to T
    int down_turns_ccw = 0;         // quarter turns applied to D
};

/// center must be one of F, R, B, L.
UnfoldingLayout make_layout(Face center);

/// Equatorial ring position of F, R, B or L (eastward, F = 0).
int ring_index(Face f);

struct CUPair {
    Tensor horizontal; // (C, a, 4a)
    Tensor vertical;   // (C, 3a, a)
    UnfoldingLayout layout;
    int side = 0;
};

CUPair unfold(const CubeFaceSet& faces, Face center);

struct Canvas43 {
    Tensor image; // (C, 3a, 4a)
    Tensor mask;  // (1, 3a, 4a), 1 where a face is present
};

/// Visualization only: the full 4-3 cross on a 3a x 4a canvas.
Canvas43 render_43_canvas(const CUPair& pair);

/// Projects a strip pair back to EP form. The center face is present in both
/// strips; the two copies are averaged. Feature tensors of any channel count
/// are accepted; strip spatial dims must be (h, 4h) and (3h, h).
Tensor cep_merge(const Tensor& horiz, const Tensor& vert, const UnfoldingLayout& layout,
                 int heq_out);

// Exact rasters rotations (90-degree steps) and horizontal wrap shift.
Tensor rot90_cw(const Tensor& x, int turns = 1);
Tensor rot90_ccw(const Tensor& x, int turns = 1);
Tensor yaw_shift_columns(const Tensor& ep, int cols);

} // namespace omnisal

#endif
