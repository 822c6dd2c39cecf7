#include "omnisal/fixture.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace omnisal {

namespace {

static_assert(std::endian::native == std::endian::little,
              "fixture I/O assumes a little-endian host");

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), 4);
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

} // namespace

void write_omt1(std::ostream& out, const Tensor& t) {
    out.write("OMT1", 4);
    put_u32(out, static_cast<std::uint32_t>(t.channels()));
    put_u32(out, static_cast<std::uint32_t>(t.height()));
    put_u32(out, static_cast<std::uint32_t>(t.width()));
    out.write(reinterpret_cast<const char*>(t.values().data()),
              static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!out)
        throw std::runtime_error("OMT1 write failed");
}

void write_omt1_file(const std::string& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for write: " + path);
    write_omt1(f, t);
}

Tensor read_omt1(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "OMT1", 4) != 0)
        throw std::runtime_error("OMT1: bad magic");
    const std::uint32_t c = get_u32(in), h = get_u32(in), w = get_u32(in);
    if (!in || c == 0 || h == 0 || w == 0 || c > (1u << 20) || h > (1u << 20) || w > (1u << 20))
        throw std::runtime_error("OMT1: bad header");
    Tensor t(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    in.read(reinterpret_cast<char*>(t.values().data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
    if (!in)
        throw std::runtime_error("OMT1: truncated payload");
    return t;
}

Tensor read_omt1_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw std::runtime_error("cannot open for read: " + path);
    return read_omt1(f);
}

Tensor textured_ep_fixture(int heq, int channels) {
    const int weq = 2 * heq;
    Tensor t = smooth_ep_fixture(heq, channels);
    struct Blob {
        double lambda, phi, sigma, amp;
    };
    // Centers chosen where the unfoldings disagree most: face borders
    // (|lambda| = pi/4, 3pi/4), a cube corner, and well onto the pole faces,
    // with nothing symmetric under quarter-turn yaw.
    static constexpr std::array<Blob, 7> blobs = {{
        {0.785398, 0.2, 0.22, 0.5},
        {0.785398, 0.6155, 0.25, -0.45}, // corner direction (1,1,1)
        {-2.356194, -0.3, 0.2, -0.5},
        {2.45, 0.55, 0.3, 0.4},
        {-0.70, 1.20, 0.22, -0.45},
        {1.60, -1.10, 0.28, 0.45},
        {-1.1, -0.1, 0.18, 0.4},
    }};
    const double pi = 3.14159265358979323846;
    for (int c = 0; c < channels; ++c)
        for (int row = 0; row < heq; ++row) {
            const double phi = pi / 2.0 - pi * (row + 0.5) / heq;
            for (int col = 0; col < weq; ++col) {
                const double lam = -pi + 2.0 * pi * (col + 0.5) / weq;
                const double x = std::cos(phi) * std::cos(lam);
                const double y = std::cos(phi) * std::sin(lam);
                const double z = std::sin(phi);
                double v = 0.55 * (t.at(c, row, col) - 0.5) + 0.5;
                for (std::size_t b = 0; b < blobs.size(); ++b) {
                    const Blob& blob = blobs[b];
                    const double bx = std::cos(blob.phi) * std::cos(blob.lambda);
                    const double by = std::cos(blob.phi) * std::sin(blob.lambda);
                    const double bz = std::sin(blob.phi);
                    const double ang = std::acos(std::clamp(x * bx + y * by + z * bz, -1.0, 1.0));
                    const double phase = 0.7 * static_cast<double>(c) + 0.9 * static_cast<double>(b);
                    v += blob.amp * std::cos(phase) * std::exp(-(ang * ang) / (blob.sigma * blob.sigma));
                }
                // Oriented gratings on both pole caps. The four unfoldings lay
                // the pole faces down at different in-plane rotations, so
                // anisotropic filters respond differently per unfolding.
                if (z > 0.55)
                    v += 0.30 * std::sin(9.0 * x + 0.4) * (z - 0.55) / 0.45;
                if (z < -0.55)
                    v += 0.28 * std::sin(8.0 * y - 0.3) * (-z - 0.55) / 0.45;
                t.at(c, row, col) = static_cast<float>(std::clamp(v, 0.02, 0.98));
            }
        }
    return t;
}

Tensor smooth_ep_fixture(int heq, int channels) {
    const int weq = 2 * heq;
    Tensor t(channels, heq, weq);
    // Per-channel coefficients for 0.5 + a*x + b*y*z + c*(x^2 - z^2) + d*y.
    static constexpr std::array<std::array<double, 4>, 3> coef = {{
        {0.20, 0.15, 0.10, 0.00},
        {0.12, -0.10, 0.08, 0.14},
        {-0.18, 0.12, -0.06, 0.09},
    }};
    const double pi = 3.14159265358979323846;
    for (int c = 0; c < channels; ++c) {
        const auto& k = coef[static_cast<std::size_t>(c % 3)];
        for (int row = 0; row < heq; ++row) {
            const double phi = pi / 2.0 - pi * (row + 0.5) / heq;
            const double cphi = std::cos(phi), sphi = std::sin(phi);
            for (int col = 0; col < weq; ++col) {
                const double lam = -pi + 2.0 * pi * (col + 0.5) / weq;
                const double x = cphi * std::cos(lam);
                const double y = cphi * std::sin(lam);
                const double z = sphi;
                const double v = 0.5 + k[0] * x + k[1] * y * z + k[2] * (x * x - z * z) + k[3] * y;
                t.at(c, row, col) = static_cast<float>(v);
            }
        }
    }
    return t;
}

} // namespace omnisal
