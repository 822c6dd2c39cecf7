#include "omnisal/params_io.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "omnisal/fixture.hpp"

namespace omnisal {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TensorStore {
    fs::path dir;
    json manifest_tensors = json::array();

    void put(const std::string& name, const Tensor& t) {
        const std::string file = name + ".omt1";
        write_omt1_file((dir / file).string(), t);
        manifest_tensors.push_back({{"name", name}, {"file", file}});
    }
};

struct TensorLoad {
    fs::path dir;

    Tensor get(const std::string& name) const {
        return read_omt1_file((dir / (name + ".omt1")).string());
    }
};

Tensor conv_weights_tensor(const ConvParams& p) {
    Tensor t(p.out_channels, p.in_channels, 9);
    std::copy(p.weights.begin(), p.weights.end(), t.values().begin());
    return t;
}

Tensor vector_tensor(const std::vector<float>& v) {
    Tensor t(1, 1, static_cast<int>(v.size()));
    std::copy(v.begin(), v.end(), t.values().begin());
    return t;
}

Tensor linear_weights_tensor(const LinearLayer& l) {
    Tensor t(1, l.out, l.in);
    std::copy(l.weights.begin(), l.weights.end(), t.values().begin());
    return t;
}

void put_conv(TensorStore& store, const std::string& name, const ConvParams& p) {
    store.put(name + ".weight", conv_weights_tensor(p));
    store.put(name + ".bias", vector_tensor(p.bias));
}

ConvParams get_conv(const TensorLoad& load, const std::string& name) {
    const Tensor w = load.get(name + ".weight");
    const Tensor b = load.get(name + ".bias");
    ConvParams p;
    p.out_channels = w.channels();
    p.in_channels = w.height();
    p.weights.assign(w.values().begin(), w.values().end());
    p.bias.assign(b.values().begin(), b.values().end());
    return p;
}

void put_linear(TensorStore& store, const std::string& name, const LinearLayer& l) {
    store.put(name + ".weight", linear_weights_tensor(l));
    store.put(name + ".bias", vector_tensor(l.bias));
}

LinearLayer get_linear(const TensorLoad& load, const std::string& name) {
    const Tensor w = load.get(name + ".weight");
    const Tensor b = load.get(name + ".bias");
    LinearLayer l;
    l.out = w.height();
    l.in = w.width();
    l.weights.assign(w.values().begin(), w.values().end());
    l.bias.assign(b.values().begin(), b.values().end());
    return l;
}

void put_se(TensorStore& store, const std::string& name, const SEParams& p) {
    put_linear(store, name + ".squeeze", p.squeeze);
    put_linear(store, name + ".excite", p.excite);
}

SEParams get_se(const TensorLoad& load, const std::string& name, int channels, int reduction) {
    SEParams p;
    p.channels = channels;
    p.reduction = reduction;
    p.squeeze = get_linear(load, name + ".squeeze");
    p.excite = get_linear(load, name + ".excite");
    return p;
}

void write_manifest(const fs::path& dir, json manifest) {
    std::ofstream f(dir / "manifest.json");
    if (!f)
        throw std::runtime_error("cannot write manifest in " + dir.string());
    f << manifest.dump(2) << "\n";
}

json read_manifest(const fs::path& dir, const std::string& expected_kind) {
    std::ifstream f(dir / "manifest.json");
    if (!f)
        throw std::runtime_error("cannot read manifest in " + dir.string());
    json m = json::parse(f);
    if (m.value("format", "") != "omnisal-params-v1" || m.value("kind", "") != expected_kind)
        throw std::runtime_error("manifest in " + dir.string() + " is not a " + expected_kind +
                                 " parameter dump");
    return m;
}

} // namespace

void save_dwf_params(const std::string& dir, const DwfParams& params) {
    fs::create_directories(dir);
    TensorStore store{dir};
    for (std::size_t i = 0; i < params.gef.size(); ++i) {
        const std::string base = "gef" + std::to_string(i);
        put_se(store, base + ".se", params.gef[i].se);
        put_conv(store, base + ".gate_conv", params.gef[i].gate_conv);
    }
    put_se(store, "waf.se", params.waf_se);
    json m;
    m["format"] = "omnisal-params-v1";
    m["kind"] = "dwf";
    m["meta"] = {{"channels", params.channels},
                 {"seed", params.seed},
                 {"shared_gef", params.options.shared_gef},
                 {"single_channel_gate", params.options.single_channel_gate},
                 {"block_shared_waf", params.options.block_shared_waf},
                 {"gef_count", params.gef.size()},
                 {"gef_se_reduction", params.gef[0].se.reduction},
                 {"waf_se_reduction", params.waf_se.reduction}};
    m["tensors"] = store.manifest_tensors;
    write_manifest(dir, std::move(m));
}

DwfParams load_dwf_params(const std::string& dir) {
    const json m = read_manifest(dir, "dwf");
    const json& meta = m.at("meta");
    DwfParams p;
    p.channels = meta.at("channels").get<int>();
    p.seed = meta.at("seed").get<std::uint64_t>();
    p.options.shared_gef = meta.at("shared_gef").get<bool>();
    p.options.single_channel_gate = meta.at("single_channel_gate").get<bool>();
    p.options.block_shared_waf = meta.at("block_shared_waf").get<bool>();
    TensorLoad load{dir};
    const auto n = meta.at("gef_count").get<std::size_t>();
    const int gef_reduction = meta.at("gef_se_reduction").get<int>();
    for (std::size_t i = 0; i < n; ++i) {
        const std::string base = "gef" + std::to_string(i);
        GefParams g;
        g.se = get_se(load, base + ".se", 2 * p.channels, gef_reduction);
        g.gate_conv = get_conv(load, base + ".gate_conv");
        p.gef.push_back(std::move(g));
    }
    p.waf_se = get_se(load, "waf.se", 4 * p.channels, meta.at("waf_se_reduction").get<int>());
    return p;
}

void save_fr_params(const std::string& dir, const FrParams& params) {
    fs::create_directories(dir);
    TensorStore store{dir};
    put_conv(store, "reduce", params.reduce);
    put_conv(store, "mod_a", params.mod_a);
    put_conv(store, "mod_b", params.mod_b);
    for (int j = 0; j < 5; ++j) {
        put_conv(store, "mask_head" + std::to_string(j), params.mask_head[static_cast<std::size_t>(j)]);
        put_conv(store, "enc_conv" + std::to_string(j), params.enc_conv[static_cast<std::size_t>(j)]);
    }
    put_conv(store, "aggregate", params.aggregate);
    put_conv(store, "detail_mask", params.detail_mask);
    put_conv(store, "fuse", params.fuse);
    json m;
    m["format"] = "omnisal-params-v1";
    m["kind"] = "fr";
    m["meta"] = {{"decoder_in", params.config.decoder_in},
                 {"encoder_in", params.config.encoder_in},
                 {"mid", params.config.mid},
                 {"encoder_mid", params.config.encoder_mid},
                 {"out", params.config.out},
                 {"seed", params.seed},
                 {"sigmoid_masks", params.options.sigmoid_masks},
                 {"shared_mask_head", params.options.shared_mask_head}};
    m["tensors"] = store.manifest_tensors;
    write_manifest(dir, std::move(m));
}

FrParams load_fr_params(const std::string& dir) {
    const json m = read_manifest(dir, "fr");
    const json& meta = m.at("meta");
    FrParams p;
    p.config.decoder_in = meta.at("decoder_in").get<int>();
    p.config.encoder_in = meta.at("encoder_in").get<int>();
    p.config.mid = meta.at("mid").get<int>();
    p.config.encoder_mid = meta.at("encoder_mid").get<int>();
    p.config.out = meta.at("out").get<int>();
    p.seed = meta.at("seed").get<std::uint64_t>();
    p.options.sigmoid_masks = meta.at("sigmoid_masks").get<bool>();
    p.options.shared_mask_head = meta.at("shared_mask_head").get<bool>();
    TensorLoad load{dir};
    p.reduce = get_conv(load, "reduce");
    p.mod_a = get_conv(load, "mod_a");
    p.mod_b = get_conv(load, "mod_b");
    for (int j = 0; j < 5; ++j) {
        p.mask_head[static_cast<std::size_t>(j)] = get_conv(load, "mask_head" + std::to_string(j));
        p.enc_conv[static_cast<std::size_t>(j)] = get_conv(load, "enc_conv" + std::to_string(j));
    }
    p.aggregate = get_conv(load, "aggregate");
    p.detail_mask = get_conv(load, "detail_mask");
    p.fuse = get_conv(load, "fuse");
    return p;
}

} // namespace omnisal
