#include "omnisal/projection.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "omnisal/threading.hpp"

namespace omnisal {

namespace {

constexpr double kPi = 3.14159265358979323846;

[[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument(what);
}

const std::array<FaceFrame, 6> kFrames = {{
    // F: looking down +x, u east (+y), v down (-z)
    {{1, 0, 0}, {0, 1, 0}, {0, 0, -1}},
    // B
    {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}},
    // L
    {{0, -1, 0}, {1, 0, 0}, {0, 0, -1}},
    // R
    {{0, 1, 0}, {-1, 0, 0}, {0, 0, -1}},
    // T: bottom edge (v = +1) meets the top edge of F
    {{0, 0, 1}, {0, 1, 0}, {1, 0, 0}},
    // D: top edge (v = -1) meets the bottom edge of F
    {{0, 0, -1}, {0, 1, 0}, {-1, 0, 0}},
}};

const std::array<Face, 4> kRing = {Face::F, Face::R, Face::B, Face::L};

double pixel_to_unit(int i, int n) {
    return (2.0 * i + 1.0) / n - 1.0;
}

/// Bilinear taps into an EP raster at continuous pixel coords, wrapping
/// horizontally and clamping vertically.
GridSample ep_sample(double row_f, double col_f, int heq, int weq) {
    GridSample s;
    const double fr = std::floor(row_f);
    const double fc = std::floor(col_f);
    int y0 = static_cast<int>(fr);
    int x0 = static_cast<int>(fc);
    const float fy = static_cast<float>(row_f - fr);
    const float fx = static_cast<float>(col_f - fc);
    auto wrap = [weq](int x) {
        int m = x % weq;
        return m < 0 ? m + weq : m;
    };
    const int xi0 = wrap(x0);
    const int xi1 = wrap(x0 + 1);
    const int yi0 = std::clamp(y0, 0, heq - 1);
    const int yi1 = std::clamp(y0 + 1, 0, heq - 1);
    s.idx[0] = static_cast<std::uint32_t>(yi0) * weq + xi0;
    s.idx[1] = static_cast<std::uint32_t>(yi0) * weq + xi1;
    s.idx[2] = static_cast<std::uint32_t>(yi1) * weq + xi0;
    s.idx[3] = static_cast<std::uint32_t>(yi1) * weq + xi1;
    s.weight[0] = (1.0f - fx) * (1.0f - fy);
    s.weight[1] = fx * (1.0f - fy);
    s.weight[2] = (1.0f - fx) * fy;
    s.weight[3] = fx * fy;
    return s;
}

/// Bilinear taps into a square face raster, clamped to the face border.
GridSample face_sample(double row_f, double col_f, int side, Face face) {
    GridSample s;
    s.face = static_cast<std::uint8_t>(face);
    const double fr = std::floor(row_f);
    const double fc = std::floor(col_f);
    int y0 = static_cast<int>(fr);
    int x0 = static_cast<int>(fc);
    const float fy = static_cast<float>(row_f - fr);
    const float fx = static_cast<float>(col_f - fc);
    const int yi0 = std::clamp(y0, 0, side - 1);
    const int yi1 = std::clamp(y0 + 1, 0, side - 1);
    const int xi0 = std::clamp(x0, 0, side - 1);
    const int xi1 = std::clamp(x0 + 1, 0, side - 1);
    s.idx[0] = static_cast<std::uint32_t>(yi0) * side + xi0;
    s.idx[1] = static_cast<std::uint32_t>(yi0) * side + xi1;
    s.idx[2] = static_cast<std::uint32_t>(yi1) * side + xi0;
    s.idx[3] = static_cast<std::uint32_t>(yi1) * side + xi1;
    s.weight[0] = (1.0f - fx) * (1.0f - fy);
    s.weight[1] = fx * (1.0f - fy);
    s.weight[2] = (1.0f - fx) * fy;
    s.weight[3] = fx * fy;
    return s;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

/// Position of canonical face pixel (r, c) inside a raster rotated k quarter
/// turns clockwise.
std::pair<int, int> place_cw(int r, int c, int n, int turns) {
    for (int i = 0; i < (turns % 4 + 4) % 4; ++i) {
        const int nr = c, nc = n - 1 - r;
        r = nr;
        c = nc;
    }
    return {r, c};
}

/// Same for a counterclockwise-rotated raster.
std::pair<int, int> place_ccw(int r, int c, int n, int turns) {
    for (int i = 0; i < (turns % 4 + 4) % 4; ++i) {
        const int nr = n - 1 - c, nc = r;
        r = nr;
        c = nc;
    }
    return {r, c};
}

} // namespace

static_assert(std::endian::native == std::endian::little,
              "grid cache I/O assumes a little-endian host");

const char* face_name(Face f) {
    static const char* names[6] = {"F", "B", "L", "R", "T", "D"};
    return names[static_cast<int>(f)];
}

Face face_from_name(const std::string& name) {
    for (int i = 0; i < kFaceCount; ++i)
        if (name == face_name(static_cast<Face>(i)))
            return static_cast<Face>(i);
    fail("unknown face label: " + name);
}

Vec3 normalize(const Vec3& v) {
    const double n = std::sqrt(v.x * v.x + v.y * v.y + v.z * v.z);
    return {v.x / n, v.y / n, v.z / n};
}

double dot(const Vec3& a, const Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

double angle_between(const Vec3& a, const Vec3& b) {
    return std::acos(std::clamp(dot(a, b), -1.0, 1.0));
}

const FaceFrame& face_frame(Face f) {
    return kFrames[static_cast<std::size_t>(f)];
}

Vec3 face_point_to_direction(Face f, double u, double v) {
    const FaceFrame& fr = kFrames[static_cast<std::size_t>(f)];
    return normalize({fr.axis.x + u * fr.u.x + v * fr.v.x,
                      fr.axis.y + u * fr.u.y + v * fr.v.y,
                      fr.axis.z + u * fr.u.z + v * fr.v.z});
}

FaceCoords direction_to_face_coords(const Vec3& d) {
    int best = 0;
    double best_dot = dot(d, kFrames[0].axis);
    for (int i = 1; i < kFaceCount; ++i) {
        const double s = dot(d, kFrames[static_cast<std::size_t>(i)].axis);
        if (s > best_dot) {
            best_dot = s;
            best = i;
        }
    }
    const FaceFrame& fr = kFrames[static_cast<std::size_t>(best)];
    const double t = dot(d, fr.axis);
    return {static_cast<Face>(best), dot(d, fr.u) / t, dot(d, fr.v) / t};
}

Vec3 latlon_to_direction(double lambda, double phi) {
    const double c = std::cos(phi);
    return {c * std::cos(lambda), c * std::sin(lambda), std::sin(phi)};
}

void direction_to_latlon(const Vec3& d, double& lambda, double& phi) {
    lambda = std::atan2(d.y, d.x);
    phi = std::asin(std::clamp(d.z, -1.0, 1.0));
}

void write_omg1(std::ostream& out, const SamplingGrid& g) {
    out.write("OMG1", 4);
    put_u32(out, static_cast<std::uint32_t>(g.dst_height));
    put_u32(out, static_cast<std::uint32_t>(g.dst_width));
    put_u32(out, static_cast<std::uint32_t>(g.src_height));
    put_u32(out, static_cast<std::uint32_t>(g.src_width));
    for (const GridSample& s : g.samples) {
        out.write(reinterpret_cast<const char*>(&s.face), 1);
        for (std::uint32_t v : s.idx)
            put_u32(out, v);
        out.write(reinterpret_cast<const char*>(s.weight), 4 * sizeof(float));
    }
    if (!out)
        throw std::runtime_error("OMG1 write failed");
}

void write_omg1_file(const std::string& path, const SamplingGrid& g) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for write: " + path);
    write_omg1(f, g);
}

SamplingGrid read_omg1(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "OMG1", 4) != 0)
        throw std::runtime_error("OMG1: bad magic");
    SamplingGrid g;
    g.dst_height = static_cast<int>(get_u32(in));
    g.dst_width = static_cast<int>(get_u32(in));
    g.src_height = static_cast<int>(get_u32(in));
    g.src_width = static_cast<int>(get_u32(in));
    if (!in || g.dst_height <= 0 || g.dst_width <= 0 || g.src_height <= 0 || g.src_width <= 0)
        throw std::runtime_error("OMG1: bad header");
    const std::size_t n = static_cast<std::size_t>(g.dst_height) * g.dst_width;
    g.samples.resize(n);
    const std::uint32_t plane = static_cast<std::uint32_t>(g.src_height) *
                                static_cast<std::uint32_t>(g.src_width);
    for (GridSample& s : g.samples) {
        in.read(reinterpret_cast<char*>(&s.face), 1);
        if (s.face != GridSample::kNoFace && s.face >= kFaceCount)
            throw std::runtime_error("OMG1: bad face index");
        for (std::uint32_t& v : s.idx) {
            v = get_u32(in);
            if (v >= plane)
                throw std::runtime_error("OMG1: source index out of range");
        }
        in.read(reinterpret_cast<char*>(s.weight), 4 * sizeof(float));
    }
    if (!in)
        throw std::runtime_error("OMG1: truncated payload");
    return g;
}

SamplingGrid read_omg1_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for read: " + path);
    return read_omg1(f);
}

std::array<SamplingGrid, 6> build_ep_to_cube_grid(int heq, int side) {
    if (side < 2 || heq < 2)
        fail("build_ep_to_cube_grid: degenerate dims");
    const int weq = 2 * heq;
    std::array<SamplingGrid, 6> grids;
    for (int f = 0; f < kFaceCount; ++f) {
        SamplingGrid& g = grids[static_cast<std::size_t>(f)];
        g.dst_height = side;
        g.dst_width = side;
        g.src_height = heq;
        g.src_width = weq;
        g.samples.resize(static_cast<std::size_t>(side) * side);
        for (int r = 0; r < side; ++r) {
            const double v = pixel_to_unit(r, side);
            for (int c = 0; c < side; ++c) {
                const double u = pixel_to_unit(c, side);
                const Vec3 d = face_point_to_direction(static_cast<Face>(f), u, v);
                double lambda, phi;
                direction_to_latlon(d, lambda, phi);
                const double col_f = (lambda + kPi) / (2.0 * kPi) * weq - 0.5;
                const double row_f = (kPi / 2.0 - phi) / kPi * heq - 0.5;
                g.samples[static_cast<std::size_t>(r) * side + c] =
                    ep_sample(row_f, col_f, heq, weq);
            }
        }
    }
    return grids;
}

SamplingGrid build_cube_to_ep_grid(int side, int heq_out) {
    if (side < 2 || heq_out < 2)
        fail("build_cube_to_ep_grid: degenerate dims");
    const int weq = 2 * heq_out;
    SamplingGrid g;
    g.dst_height = heq_out;
    g.dst_width = weq;
    g.src_height = side;
    g.src_width = side;
    g.samples.resize(static_cast<std::size_t>(heq_out) * weq);
    for (int r = 0; r < heq_out; ++r) {
        const double phi = kPi / 2.0 - kPi * (r + 0.5) / heq_out;
        for (int c = 0; c < weq; ++c) {
            const double lambda = -kPi + 2.0 * kPi * (c + 0.5) / weq;
            const FaceCoords fc = direction_to_face_coords(latlon_to_direction(lambda, phi));
            const double col_f = (fc.u + 1.0) * 0.5 * side - 0.5;
            const double row_f = (fc.v + 1.0) * 0.5 * side - 0.5;
            g.samples[static_cast<std::size_t>(r) * weq + c] =
                face_sample(row_f, col_f, side, fc.face);
        }
    }
    return g;
}

Tensor apply_grid(const SamplingGrid& g, const Tensor& src) {
    if (src.height() != g.src_height || src.width() != g.src_width)
        fail("apply_grid: source dims do not match grid");
    Tensor out(src.channels(), g.dst_height, g.dst_width);
    const std::size_t n = g.samples.size();
    parallel_for(0, src.channels(), [&](int c) {
        const float* plane = src.channel(c);
        float* dst = out.channel(c);
        for (std::size_t i = 0; i < n; ++i) {
            const GridSample& s = g.samples[i];
            dst[i] = plane[s.idx[0]] * s.weight[0] + plane[s.idx[1]] * s.weight[1] +
                     plane[s.idx[2]] * s.weight[2] + plane[s.idx[3]] * s.weight[3];
        }
    });
    return out;
}

Tensor apply_grid(const SamplingGrid& g, const CubeFaceSet& src) {
    if (src.side != g.src_height || src.side != g.src_width)
        fail("apply_grid: face side does not match grid");
    const int channels = src.faces[0].channels();
    for (const Tensor& f : src.faces)
        if (f.channels() != channels || f.height() != src.side || f.width() != src.side)
            fail("apply_grid: face set is not six equal rasters");
    Tensor out(channels, g.dst_height, g.dst_width);
    const std::size_t n = g.samples.size();
    parallel_for(0, channels, [&](int c) {
        std::array<const float*, 6> planes;
        for (int f = 0; f < kFaceCount; ++f)
            planes[static_cast<std::size_t>(f)] = src.faces[static_cast<std::size_t>(f)].channel(c);
        float* dst = out.channel(c);
        for (std::size_t i = 0; i < n; ++i) {
            const GridSample& s = g.samples[i];
            const float* plane = planes[s.face];
            dst[i] = plane[s.idx[0]] * s.weight[0] + plane[s.idx[1]] * s.weight[1] +
                     plane[s.idx[2]] * s.weight[2] + plane[s.idx[3]] * s.weight[3];
        }
    });
    return out;
}

CubeFaceSet ep_to_cube(const Tensor& ep, int side) {
    if (ep.width() != 2 * ep.height())
        fail("ep_to_cube: EP width must equal 2 * height");
    const auto grids = build_ep_to_cube_grid(ep.height(), side);
    CubeFaceSet out;
    out.side = side;
    for (int f = 0; f < kFaceCount; ++f)
        out.faces[static_cast<std::size_t>(f)] = apply_grid(grids[static_cast<std::size_t>(f)], ep);
    return out;
}

Tensor cube_to_ep(const CubeFaceSet& faces, int heq_out) {
    return apply_grid(build_cube_to_ep_grid(faces.side, heq_out), faces);
}

int ring_index(Face f) {
    for (int i = 0; i < 4; ++i)
        if (kRing[static_cast<std::size_t>(i)] == f)
            return i;
    fail("ring_index: face is not equatorial");
}

UnfoldingLayout make_layout(Face center) {
    if (center == Face::T || center == Face::D)
        fail("make_layout: center must be F, R, B or L");
    const int k = ring_index(center);
    UnfoldingLayout l;
    l.center = center;
    for (int s = 0; s < 4; ++s)
        l.horizontal[static_cast<std::size_t>(s)] = kRing[static_cast<std::size_t>((k + 3 + s) % 4)];
    l.vertical = {Face::T, center, Face::D};
    l.top_turns_cw = k;
    l.down_turns_ccw = k;
    return l;
}

CUPair unfold(const CubeFaceSet& faces, Face center) {
    const UnfoldingLayout layout = make_layout(center);
    const int a = faces.side;
    const int channels = faces.faces[0].channels();
    for (const Tensor& f : faces.faces)
        if (f.channels() != channels || f.height() != a || f.width() != a)
            fail("unfold: face set is not six equal rasters");
    CUPair pair;
    pair.layout = layout;
    pair.side = a;
    pair.horizontal = Tensor(channels, a, 4 * a);
    pair.vertical = Tensor(channels, 3 * a, a);
    for (int s = 0; s < 4; ++s) {
        const Tensor& f = faces[layout.horizontal[static_cast<std::size_t>(s)]];
        for (int c = 0; c < channels; ++c)
            for (int r = 0; r < a; ++r)
                std::copy_n(f.channel(c) + static_cast<std::size_t>(r) * a, a,
                            pair.horizontal.channel(c) +
                                static_cast<std::size_t>(r) * 4 * a + static_cast<std::size_t>(s) * a);
    }
    const Tensor top = rot90_cw(faces[Face::T], layout.top_turns_cw);
    const Tensor down = rot90_ccw(faces[Face::D], layout.down_turns_ccw);
    const Tensor& mid = faces[center];
    for (int c = 0; c < channels; ++c) {
        float* dst = pair.vertical.channel(c);
        std::copy_n(top.channel(c), static_cast<std::size_t>(a) * a, dst);
        std::copy_n(mid.channel(c), static_cast<std::size_t>(a) * a, dst + static_cast<std::size_t>(a) * a);
        std::copy_n(down.channel(c), static_cast<std::size_t>(a) * a,
                    dst + 2 * static_cast<std::size_t>(a) * a);
    }
    return pair;
}

Canvas43 render_43_canvas(const CUPair& pair) {
    const int a = pair.side;
    const int channels = pair.horizontal.channels();
    Canvas43 out;
    out.image = Tensor(channels, 3 * a, 4 * a);
    out.mask = Tensor(1, 3 * a, 4 * a);
    // Horizontal strip in the middle band, vertical strip through slot 1.
    for (int c = 0; c < channels; ++c) {
        for (int r = 0; r < a; ++r)
            std::copy_n(pair.horizontal.channel(c) + static_cast<std::size_t>(r) * 4 * a, 4 * a,
                        out.image.channel(c) + (static_cast<std::size_t>(a) + r) * 4 * a);
        for (int r = 0; r < a; ++r) {
            std::copy_n(pair.vertical.channel(c) + static_cast<std::size_t>(r) * a, a,
                        out.image.channel(c) + static_cast<std::size_t>(r) * 4 * a + a);
            std::copy_n(pair.vertical.channel(c) + (2 * static_cast<std::size_t>(a) + r) * a, a,
                        out.image.channel(c) + (2 * static_cast<std::size_t>(a) + r) * 4 * a + a);
        }
    }
    for (int r = 0; r < a; ++r) {
        for (int c = 0; c < 4 * a; ++c)
            out.mask.at(0, a + r, c) = 1.0f;
        for (int c = 0; c < a; ++c) {
            out.mask.at(0, r, a + c) = 1.0f;
            out.mask.at(0, 2 * a + r, a + c) = 1.0f;
        }
    }
    return out;
}

Tensor cep_merge(const Tensor& horiz, const Tensor& vert, const UnfoldingLayout& layout,
                 int heq_out) {
    const int a = horiz.height();
    if (horiz.width() != 4 * a)
        fail("cep_merge: horizontal strip must be a x 4a");
    if (vert.height() != 3 * a || vert.width() != a)
        fail("cep_merge: vertical strip must be 3a x a");
    if (horiz.channels() != vert.channels())
        fail("cep_merge: strip channel counts differ");

    const SamplingGrid grid = build_cube_to_ep_grid(a, heq_out);
    const int weq = 2 * heq_out;
    const int channels = horiz.channels();
    Tensor out(channels, heq_out, weq);

    std::array<int, 6> slot_of_face;
    slot_of_face.fill(-1);
    for (int s = 0; s < 4; ++s)
        slot_of_face[static_cast<std::size_t>(layout.horizontal[static_cast<std::size_t>(s)])] = s;

    // Transform a within-face fetch into strip fetches; the center face is
    // fetched from both strips with halved weights.
    const std::size_t n = grid.samples.size();
    parallel_for(0, channels, [&](int ch) {
        const float* hplane = horiz.channel(ch);
        const float* vplane = vert.channel(ch);
        float* dst = out.channel(ch);
        for (std::size_t i = 0; i < n; ++i) {
            const GridSample& s = grid.samples[i];
            const Face face = static_cast<Face>(s.face);
            double acc = 0.0;
            const bool in_ring = slot_of_face[s.face] >= 0;
            if (in_ring) {
                const int slot = slot_of_face[s.face];
                const float wmul = face == layout.center ? 0.5f : 1.0f;
                for (int t = 0; t < 4; ++t) {
                    const int r = static_cast<int>(s.idx[t]) / a;
                    const int c = static_cast<int>(s.idx[t]) % a;
                    acc += static_cast<double>(hplane[static_cast<std::size_t>(r) * 4 * a +
                                                      static_cast<std::size_t>(slot) * a + c]) *
                           s.weight[t] * wmul;
                }
            }
            if (face == layout.center) {
                for (int t = 0; t < 4; ++t) {
                    const int r = static_cast<int>(s.idx[t]) / a;
                    const int c = static_cast<int>(s.idx[t]) % a;
                    acc += static_cast<double>(vplane[(static_cast<std::size_t>(a) + r) * a + c]) *
                           s.weight[t] * 0.5f;
                }
            } else if (face == Face::T) {
                for (int t = 0; t < 4; ++t) {
                    const int r = static_cast<int>(s.idx[t]) / a;
                    const int c = static_cast<int>(s.idx[t]) % a;
                    const auto [sr, sc] = place_cw(r, c, a, layout.top_turns_cw);
                    acc += static_cast<double>(vplane[static_cast<std::size_t>(sr) * a + sc]) *
                           s.weight[t];
                }
            } else if (face == Face::D) {
                for (int t = 0; t < 4; ++t) {
                    const int r = static_cast<int>(s.idx[t]) / a;
                    const int c = static_cast<int>(s.idx[t]) % a;
                    const auto [sr, sc] = place_ccw(r, c, a, layout.down_turns_ccw);
                    acc += static_cast<double>(vplane[(2 * static_cast<std::size_t>(a) + sr) * a + sc]) *
                           s.weight[t];
                }
            }
            dst[i] = static_cast<float>(acc);
        }
    });
    return out;
}

Tensor rot90_cw(const Tensor& x, int turns) {
    turns = (turns % 4 + 4) % 4;
    if (turns == 0)
        return x;
    if (x.height() != x.width())
        fail("rot90: square rasters only");
    const int n = x.height();
    Tensor out(x.channels(), n, n);
    for (int c = 0; c < x.channels(); ++c)
        for (int r = 0; r < n; ++r)
            for (int col = 0; col < n; ++col) {
                const auto [sr, sc] = place_cw(r, col, n, turns);
                out.at(c, sr, sc) = x.at(c, r, col);
            }
    return out;
}

Tensor rot90_ccw(const Tensor& x, int turns) {
    turns = (turns % 4 + 4) % 4;
    if (turns == 0)
        return x;
    if (x.height() != x.width())
        fail("rot90: square rasters only");
    const int n = x.height();
    Tensor out(x.channels(), n, n);
    for (int c = 0; c < x.channels(); ++c)
        for (int r = 0; r < n; ++r)
            for (int col = 0; col < n; ++col) {
                const auto [sr, sc] = place_ccw(r, col, n, turns);
                out.at(c, sr, sc) = x.at(c, r, col);
            }
    return out;
}

Tensor yaw_shift_columns(const Tensor& ep, int cols) {
    const int w = ep.width();
    Tensor out(ep.channels(), ep.height(), w);
    auto wrap = [w](int x) {
        int m = x % w;
        return m < 0 ? m + w : m;
    };
    for (int c = 0; c < ep.channels(); ++c)
        for (int r = 0; r < ep.height(); ++r)
            for (int x = 0; x < w; ++x)
                out.at(c, r, x) = ep.at(c, r, wrap(x - cols));
    return out;
}

} // namespace omnisal
