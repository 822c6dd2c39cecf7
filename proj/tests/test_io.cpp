#include <doctest.h>

#include <stdexcept>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>
#include <cmath>

#include "omnisal/fixture.hpp"
#include "omnisal/image.hpp"
#include "omnisal/params_io.hpp"
#include "omnisal/projection.hpp"

using namespace omnisal;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("omnisal_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

bool bytes_equal(const Tensor& a, const Tensor& b) {
    return a.same_shape(b) &&
           std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(float)) == 0;
}

} // namespace

TEST_CASE("OMT1 round trip is bitwise and the header is as documented") {
    Rng rng(501);
    const Tensor t = seeded_tensor(3, 5, 7, rng, -4.0f, 4.0f);
    std::stringstream buf;
    write_omt1(buf, t);
    const std::string raw = buf.str();
    REQUIRE(raw.size() == 4 + 12 + t.size() * 4);
    CHECK(raw.compare(0, 4, "OMT1") == 0);
    std::uint32_t c = 0, h = 0, w = 0;
    std::memcpy(&c, raw.data() + 4, 4);
    std::memcpy(&h, raw.data() + 8, 4);
    std::memcpy(&w, raw.data() + 12, 4);
    CHECK(c == 3);
    CHECK(h == 5);
    CHECK(w == 7);

    std::stringstream in(raw);
    CHECK(bytes_equal(read_omt1(in), t));

    std::stringstream bad("NOPE");
    CHECK_THROWS(read_omt1(bad));
}

TEST_CASE("EquirectImage enforces its invariants") {
    auto make = [](Tensor t) { return EquirectImage(std::move(t)); };
    CHECK_THROWS_AS(make(Tensor(2, 4, 8)), std::invalid_argument);
    CHECK_THROWS_AS(make(Tensor(1, 4, 9)), std::invalid_argument);
    Tensor neg(1, 4, 8);
    neg.at(0, 0, 0) = -0.1f;
    CHECK_THROWS_AS(make(neg), std::invalid_argument);
    CHECK_NOTHROW(make(Tensor::full(3, 4, 8, 0.5f)));
}

TEST_CASE("PNG gray and RGB round trips land on the 8-bit grid") {
    TempDir tmp;
    Rng rng(502);
    for (int channels : {1, 3}) {
        Tensor t(channels, 6, 9);
        for (float& v : t.values())
            v = std::round(rng.uniform(0.0f, 1.0f) * 255.0f) / 255.0f;
        const std::string path = (tmp.path / ("t" + std::to_string(channels) + ".png")).string();
        write_png(path, t);
        const Tensor back = read_png(path);
        REQUIRE(back.same_shape(t));
        for (std::size_t i = 0; i < t.size(); ++i)
            CHECK(back.values()[i] == doctest::Approx(t.values()[i]).epsilon(1e-6));
    }
}

TEST_CASE("PGM round trip") {
    TempDir tmp;
    Tensor t(1, 3, 4);
    float v = 0.0f;
    for (float& e : t.values())
        e = (v += 1.0f) / 16.0f;
    const std::string path = (tmp.path / "t.pgm").string();
    write_pgm(path, t);
    const Tensor back = read_pgm(path);
    REQUIRE(back.same_shape(t));
    for (std::size_t i = 0; i < t.size(); ++i)
        CHECK(std::abs(back.values()[i] - t.values()[i]) <= 0.5f / 255.0f + 1e-6f);
    CHECK_THROWS(write_pgm((tmp.path / "rgb.pgm").string(), Tensor(3, 3, 4)));
    CHECK_THROWS(read_png((tmp.path / "missing.png").string()));

    // Header comments are tolerated.
    {
        std::ofstream f(tmp.path / "c.pgm", std::ios::binary);
        f << "P5\n# a comment\n2 2\n255\n";
        const unsigned char px[4] = {0, 85, 170, 255};
        f.write(reinterpret_cast<const char*>(px), 4);
    }
    const Tensor c = read_pgm((tmp.path / "c.pgm").string());
    CHECK(c.width() == 2);
    CHECK(c.at(0, 1, 1) == doctest::Approx(1.0f));
}

TEST_CASE("grid cache file round trips through disk") {
    TempDir tmp;
    const SamplingGrid g = build_cube_to_ep_grid(8, 16);
    const std::string path = (tmp.path / "grid.omg1").string();
    write_omg1_file(path, g);
    const SamplingGrid r = read_omg1_file(path);
    REQUIRE(r.samples.size() == g.samples.size());
    Rng rng(503);
    const CubeFaceSet faces = ep_to_cube(seeded_tensor(2, 16, 32, rng, 0.0f, 1.0f), 8);
    CHECK(bytes_equal(apply_grid(g, faces), apply_grid(r, faces)));
}

TEST_CASE("corrupt grid caches are rejected") {
    const SamplingGrid g = build_cube_to_ep_grid(8, 16);
    std::stringstream buf;
    write_omg1(buf, g);
    std::string raw = buf.str();
    // First record's face byte sits right after the 20-byte header.
    raw[20] = 9;
    std::stringstream bad_face(raw);
    CHECK_THROWS(read_omg1(bad_face));
    raw[20] = 0;
    raw[21] = static_cast<char>(0xff); // source index far out of range
    raw[22] = static_cast<char>(0xff);
    std::stringstream bad_idx(raw);
    CHECK_THROWS(read_omg1(bad_idx));
    std::stringstream truncated(raw.substr(0, 40));
    CHECK_THROWS(read_omg1(truncated));
}

TEST_CASE("DWF parameter dump/load preserves every weight") {
    TempDir tmp;
    DwfOptions opt;
    opt.shared_gef = false;
    opt.block_shared_waf = false;
    const DwfParams p = DwfParams::seeded(6, 777, opt);
    save_dwf_params((tmp.path / "dwf").string(), p);
    const DwfParams q = load_dwf_params((tmp.path / "dwf").string());
    CHECK(q.channels == p.channels);
    CHECK(q.options.shared_gef == p.options.shared_gef);
    REQUIRE(q.gef.size() == p.gef.size());
    for (std::size_t i = 0; i < p.gef.size(); ++i) {
        CHECK(q.gef[i].se.squeeze.weights == p.gef[i].se.squeeze.weights);
        CHECK(q.gef[i].se.excite.bias == p.gef[i].se.excite.bias);
        CHECK(q.gef[i].gate_conv.weights == p.gef[i].gate_conv.weights);
    }
    CHECK(q.waf_se.squeeze.weights == p.waf_se.squeeze.weights);

    // Loaded parameters drive identical computation.
    Rng rng(504);
    const Tensor fe = seeded_tensor(6, 4, 4, rng);
    std::vector<Tensor> cus;
    for (int i = 0; i < 4; ++i)
        cus.push_back(seeded_tensor(6, 4, 4, rng));
    CHECK(bytes_equal(dwf_fuse(fe, cus, p).fused, dwf_fuse(fe, cus, q).fused));
}

TEST_CASE("FR parameter dump/load preserves every weight") {
    TempDir tmp;
    FrLevelConfig cfg;
    cfg.decoder_in = 4;
    cfg.encoder_in = 3;
    cfg.mid = 2;
    cfg.encoder_mid = 2;
    cfg.out = 3;
    FrOptions opt;
    opt.sigmoid_masks = true;
    const FrParams p = FrParams::seeded(cfg, 888, opt);
    save_fr_params((tmp.path / "fr").string(), p);
    const FrParams q = load_fr_params((tmp.path / "fr").string());
    CHECK(q.config.out == cfg.out);
    CHECK(q.options.sigmoid_masks);
    CHECK(q.reduce.weights == p.reduce.weights);
    CHECK(q.fuse.bias == p.fuse.bias);
    for (int j = 0; j < 5; ++j)
        CHECK(q.mask_head[static_cast<std::size_t>(j)].weights ==
              p.mask_head[static_cast<std::size_t>(j)].weights);

    Rng rng(505);
    FrLevelInputs in;
    in.decoder = seeded_tensor(cfg.decoder_in, 3, 3, rng);
    for (auto& e : in.encoders)
        e = seeded_tensor(cfg.encoder_in, 6, 6, rng);
    CHECK(bytes_equal(fr_module(in, p), fr_module(in, q)));
}

TEST_CASE("smooth fixture is band-limited into [0,1] and deterministic") {
    const Tensor a = smooth_ep_fixture(64, 3);
    const Tensor b = smooth_ep_fixture(64, 3);
    CHECK(bytes_equal(a, b));
    CHECK(a.min_value() >= 0.0f);
    CHECK(a.max_value() <= 1.0f);
    CHECK(a.max_value() - a.min_value() > 0.1f);
}
