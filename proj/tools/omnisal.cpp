// omnisal - omnidirectional saliency toolkit CLI.
//
// Exit codes: 0 success, 1 I/O error, 2 validation error, 3 selftest failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "omnisal/fixture.hpp"
#include "omnisal/image.hpp"
#include "omnisal/metrics.hpp"
#include "omnisal/pipeline.hpp"
#include "omnisal/projection.hpp"
#include "omnisal/threading.hpp"
#include "selftest.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace omnisal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIo = 1;
constexpr int kExitValidation = 2;
constexpr int kExitSelftest = 3;

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---- run configuration (versioned JSON schema; flags override file) ----

struct RunConfig {
    PipelineConfig pipeline;
    int threads = 0; // 0 = library default
};

void apply_config_json(RunConfig& cfg, const json& j) {
    if (!j.is_object())
        throw ValidationError("config: top-level value must be an object");
    if (j.value("version", 1) != 1)
        throw ValidationError("config: unsupported version (expected 1)");
    for (auto& [key, value] : j.items()) {
        try {
            if (key == "version") {
            } else if (key == "seed") {
                cfg.pipeline.seed = value.get<std::uint64_t>();
            } else if (key == "encoder_channels") {
                auto v = value.get<std::vector<int>>();
                if (v.size() != 5)
                    throw ValidationError("config: encoder_channels needs 5 entries");
                std::copy(v.begin(), v.end(), cfg.pipeline.encoder_channels.begin());
            } else if (key == "fr_channels") {
                auto v = value.get<std::vector<int>>();
                if (v.size() != 3)
                    throw ValidationError("config: fr_channels needs 3 entries");
                std::copy(v.begin(), v.end(), cfg.pipeline.fr_out_channels.begin());
            } else if (key == "shared_gef") {
                cfg.pipeline.dwf.shared_gef = value.get<bool>();
            } else if (key == "single_channel_gate") {
                cfg.pipeline.dwf.single_channel_gate = value.get<bool>();
            } else if (key == "block_shared_waf") {
                cfg.pipeline.dwf.block_shared_waf = value.get<bool>();
            } else if (key == "sigmoid_masks") {
                cfg.pipeline.fr.sigmoid_masks = value.get<bool>();
            } else if (key == "shared_mask_head") {
                cfg.pipeline.fr.shared_mask_head = value.get<bool>();
            } else if (key == "ablation") {
                cfg.pipeline.ablation = ablation_from_name(value.get<std::string>());
            } else if (key == "threads") {
                cfg.threads = value.get<int>();
            } else {
                throw ValidationError("config: unknown field '" + key + "'");
            }
        } catch (const json::exception&) {
            throw ValidationError("config: bad value for field '" + key + "'");
        }
    }
}

json config_to_json(const RunConfig& cfg) {
    json j;
    j["version"] = 1;
    j["seed"] = cfg.pipeline.seed;
    j["encoder_channels"] = cfg.pipeline.encoder_channels;
    j["fr_channels"] = cfg.pipeline.fr_out_channels;
    j["shared_gef"] = cfg.pipeline.dwf.shared_gef;
    j["single_channel_gate"] = cfg.pipeline.dwf.single_channel_gate;
    j["block_shared_waf"] = cfg.pipeline.dwf.block_shared_waf;
    j["sigmoid_masks"] = cfg.pipeline.fr.sigmoid_masks;
    j["shared_mask_head"] = cfg.pipeline.fr.shared_mask_head;
    j["ablation"] = ablation_name(cfg.pipeline.ablation);
    j["threads"] = cfg.threads;
    return j;
}

Tensor load_ep_image(const std::string& path) {
    Tensor t = read_image(path);
    try {
        EquirectImage validated(std::move(t));
        return validated.pixels();
    } catch (const std::invalid_argument& e) {
        throw ValidationError(std::string(e.what()) + ": " + path);
    }
}

// ---- subcommands ----

int cmd_convert_e2c(const std::string& in, const std::string& out_dir, int face_size) {
    const Tensor ep = load_ep_image(in);
    const int side = face_size > 0 ? face_size : ep.width() / 4;
    if (side < 2)
        throw ValidationError("face size must be at least 2");
    const CubeFaceSet faces = ep_to_cube(ep, side);
    fs::create_directories(out_dir);
    for (int f = 0; f < kFaceCount; ++f) {
        const fs::path p = fs::path(out_dir) /
                           (std::string("face_") + face_name(static_cast<Face>(f)) + ".png");
        write_png(p.string(), faces.faces[static_cast<std::size_t>(f)]);
    }
    std::cout << "wrote 6 faces of side " << side << " to " << out_dir << "\n";
    return kExitOk;
}

int cmd_convert_c2e(const std::string& in_dir, const std::string& out, int heq) {
    CubeFaceSet faces;
    for (int f = 0; f < kFaceCount; ++f) {
        const fs::path p = fs::path(in_dir) /
                           (std::string("face_") + face_name(static_cast<Face>(f)) + ".png");
        faces.faces[static_cast<std::size_t>(f)] = read_png(p.string());
    }
    faces.side = faces.faces[0].height();
    for (const Tensor& t : faces.faces) {
        if (t.height() != faces.side || t.width() != faces.side)
            throw ValidationError("cube faces must be equal squares");
        if (t.channels() != faces.faces[0].channels())
            throw ValidationError("cube faces must share one channel count");
    }
    const int out_heq = heq > 0 ? heq : 2 * faces.side;
    write_image(out, cube_to_ep(faces, out_heq));
    std::cout << "wrote " << out << " (" << 2 * out_heq << "x" << out_heq << ")\n";
    return kExitOk;
}

int cmd_unfold(const std::string& in, const std::string& out_dir, const std::string& center,
               bool canvas) {
    const Tensor ep = load_ep_image(in);
    const Face c = face_from_name(center);
    if (c == Face::T || c == Face::D)
        throw ValidationError("unfold center must be one of F, R, B, L");
    const CubeFaceSet faces = ep_to_cube(ep, ep.width() / 4);
    const CUPair pair = unfold(faces, c);
    fs::create_directories(out_dir);
    write_png((fs::path(out_dir) / ("cu_" + center + "_horizontal.png")).string(), pair.horizontal);
    write_png((fs::path(out_dir) / ("cu_" + center + "_vertical.png")).string(), pair.vertical);
    if (canvas) {
        const Canvas43 cv = render_43_canvas(pair);
        write_png((fs::path(out_dir) / ("cu_" + center + "_canvas.png")).string(), cv.image);
        write_png((fs::path(out_dir) / ("cu_" + center + "_mask.png")).string(), cv.mask);
    }
    std::cout << "wrote unfolding centered on " << center << " to " << out_dir << "\n";
    return kExitOk;
}

int cmd_forward(const std::string& in, const std::string& out, const RunConfig& cfg,
                const std::string& dump_dir) {
    Tensor ep = load_ep_image(in);
    if (ep.height() % 32 != 0)
        throw ValidationError("forward: input height must be divisible by 32");
    RunConfig effective = cfg;
    effective.pipeline.input_channels = ep.channels();
    const PipelineParams params = PipelineParams::seeded(effective.pipeline);

    TensorSink sink;
    if (!dump_dir.empty()) {
        fs::create_directories(dump_dir);
        sink = [&dump_dir](const std::string& name, const Tensor& t) {
            std::string file = name;
            for (char& ch : file)
                if (ch == '/' || ch == '.')
                    ch = '_';
            write_omt1_file((fs::path(dump_dir) / (file + ".omt1")).string(), t);
        };
    }

    const ForwardOutput result = forward(ep, params, sink);
    write_image(out, result.final_map);

    const fs::path base(out);
    for (std::size_t i = 0; i < result.side_outputs.size(); ++i) {
        fs::path side = base;
        side.replace_extension("");
        side += "_side_k" + std::to_string(4 - i) + ".png";
        write_png(side.string(), result.side_outputs[i]);
    }

    json prov = config_to_json(effective);
    prov["input"] = in;
    prov["input_dims"] = {ep.channels(), ep.height(), ep.width()};
    if (result.has_fusion_weights)
        prov["fusion_weights"] = result.fusion_weights.w;
    fs::path provenance = base;
    provenance.replace_extension("");
    provenance += ".config.json";
    std::ofstream pf(provenance);
    pf << prov.dump(2) << "\n";
    std::cout << "wrote " << out << " and " << result.side_outputs.size() << " side outputs\n";
    return kExitOk;
}

Tensor load_binary_gt(const std::string& path) {
    Tensor t = read_image(path);
    if (t.channels() != 1)
        throw ValidationError("ground truth must be grayscale: " + path);
    for (float& v : t.values())
        v = v >= 0.5f ? 1.0f : 0.0f;
    return t;
}

int cmd_eval(const std::string& pred_dir, const std::string& gt_dir, const std::string& out,
             const std::string& csv) {
    std::map<std::string, fs::path> preds;
    for (const auto& entry : fs::directory_iterator(pred_dir)) {
        const std::string ext = entry.path().extension().string();
        if (ext == ".png" || ext == ".pgm")
            preds[entry.path().stem().string()] = entry.path();
    }
    if (preds.empty())
        throw ValidationError("no .png/.pgm predictions found in " + pred_dir);

    json images = json::array();
    EvalReport mean;
    int count = 0;
    std::ostringstream csv_rows;
    csv_rows << "name,e_phi,s_measure,weighted_f,f_beta,mae,threshold\n";
    for (const auto& [stem, path] : preds) {
        fs::path gt_path = fs::path(gt_dir) / (stem + ".png");
        if (!fs::exists(gt_path))
            gt_path = fs::path(gt_dir) / (stem + ".pgm");
        if (!fs::exists(gt_path))
            throw ValidationError("missing ground truth for " + stem + " in " + gt_dir);
        Tensor sal = read_image(path.string());
        if (sal.channels() != 1)
            throw ValidationError("prediction must be grayscale: " + path.string());
        const Tensor gt = load_binary_gt(gt_path.string());
        EvalReport r;
        try {
            r = evaluate(sal, gt);
        } catch (const std::invalid_argument& e) {
            throw ValidationError(std::string(e.what()) + " (image '" + stem + "')");
        }
        images.push_back({{"name", stem},
                          {"e_phi", r.e_phi},
                          {"s_measure", r.s_measure},
                          {"weighted_f", r.weighted_f},
                          {"f_beta", r.f_beta},
                          {"mae", r.mae},
                          {"threshold", r.threshold}});
        csv_rows << stem << "," << r.e_phi << "," << r.s_measure << "," << r.weighted_f << ","
                 << r.f_beta << "," << r.mae << "," << r.threshold << "\n";
        mean.e_phi += r.e_phi;
        mean.s_measure += r.s_measure;
        mean.weighted_f += r.weighted_f;
        mean.f_beta += r.f_beta;
        mean.mae += r.mae;
        ++count;
    }
    json report;
    report["images"] = images;
    report["mean"] = {{"e_phi", mean.e_phi / count},
                      {"s_measure", mean.s_measure / count},
                      {"weighted_f", mean.weighted_f / count},
                      {"f_beta", mean.f_beta / count},
                      {"mae", mean.mae / count},
                      {"count", count}};
    std::ofstream rf(out);
    if (!rf)
        throw std::runtime_error("cannot write report: " + out);
    rf << report.dump(2) << "\n";
    if (!csv.empty()) {
        std::ofstream cf(csv);
        if (!cf)
            throw std::runtime_error("cannot write CSV: " + csv);
        cf << csv_rows.str();
    }
    std::cout << "evaluated " << count << " image(s); report at " << out << "\n";
    return kExitOk;
}

int cmd_fixture_gen(const std::string& out, int heq, int channels) {
    if (heq < 2 || (channels != 1 && channels != 3))
        throw ValidationError("fixture: heq must be >= 2 and channels 1 or 3");
    write_image(out, smooth_ep_fixture(heq, channels));
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

int cmd_fixture_info(const std::string& in) {
    const Tensor t = read_omt1_file(in);
    std::cout << in << ": OMT1 tensor " << t.channels() << "x" << t.height() << "x" << t.width()
              << ", min " << t.min_value() << ", max " << t.max_value() << "\n";
    return kExitOk;
}

int cmd_selftest(bool quick) {
    selftest::Options opt;
    opt.quick = quick;
    const selftest::Report report = selftest::run(opt, std::cout);
    std::cout << (report.all_passed ? "selftest passed" : "selftest FAILED") << " in "
              << report.total_seconds << " s\n";
    return report.all_passed ? kExitOk : kExitSelftest;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"omnisal - omnidirectional saliency toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // global flags may follow the subcommand

    int threads = 0;
    app.add_option("--threads", threads, "cap internal parallelism (default: OMNISAL_THREADS or all cores)");

    // convert
    auto* convert = app.add_subcommand("convert", "equirectangular <-> cube-map conversion");
    convert->require_subcommand(1);
    std::string conv_in, conv_out;
    int face_size = 0, conv_heq = 0;
    auto* e2c = convert->add_subcommand("e2c", "split an EP image into six face PNGs");
    e2c->add_option("--in", conv_in, "input EP image (.png/.pgm)")->required();
    e2c->add_option("--out", conv_out, "output directory")->required();
    e2c->add_option("--face-size", face_size, "face side in pixels (default: width/4)");
    auto* c2e = convert->add_subcommand("c2e", "merge face_?.png files into one EP image");
    c2e->add_option("--in", conv_in, "directory containing face_F.png .. face_D.png")->required();
    c2e->add_option("--out", conv_out, "output EP image")->required();
    c2e->add_option("--heq", conv_heq, "output EP height (default: 2 * face side)");

    // unfold
    auto* unfold_cmd = app.add_subcommand("unfold", "write the 4-3 unfolding strips of an EP image");
    std::string unf_in, unf_out, unf_center = "F";
    bool unf_canvas = false;
    unfold_cmd->add_option("--in", unf_in, "input EP image")->required();
    unfold_cmd->add_option("--out", unf_out, "output directory")->required();
    unfold_cmd->add_option("--center", unf_center, "center face: F, R, B or L");
    unfold_cmd->add_flag("--canvas", unf_canvas, "also write the 3a x 4a canvas and mask");

    // forward
    auto* fwd = app.add_subcommand("forward", "run the forward pass on an EP image");
    std::string fwd_in, fwd_out, fwd_config, fwd_dump, fwd_ablation;
    std::optional<std::uint64_t> fwd_seed;
    fwd->add_option("--in", fwd_in, "input EP image (height divisible by 32)")->required();
    fwd->add_option("--out", fwd_out, "output saliency PNG")->required();
    fwd->add_option("--config", fwd_config, "JSON run configuration");
    fwd->add_option("--seed", fwd_seed, "parameter seed (overrides config)");
    fwd->add_option("--ablation", fwd_ablation,
                    "structural ablation: none, no_cu, no_dwf, no_fr, no_waf, six_faces");
    fwd->add_option("--dump-tensors", fwd_dump, "directory for OMT1 dumps of intermediates");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "score saliency maps against ground truth");
    std::string eval_pred, eval_gt, eval_out, eval_csv;
    eval_cmd->add_option("--pred", eval_pred, "directory of prediction maps")->required();
    eval_cmd->add_option("--gt", eval_gt, "directory of binary ground-truth maps")->required();
    eval_cmd->add_option("--out", eval_out, "output JSON report")->required();
    eval_cmd->add_option("--csv", eval_csv, "optional CSV export");

    // fixture
    auto* fixture = app.add_subcommand("fixture", "fixture management");
    fixture->require_subcommand(1);
    std::string fix_out, fix_in;
    int fix_heq = 256, fix_channels = 1;
    auto* gen = fixture->add_subcommand("gen-smooth", "write the band-limited smooth EP test image");
    gen->add_option("--out", fix_out, "output image")->required();
    gen->add_option("--heq", fix_heq, "EP height");
    gen->add_option("--channels", fix_channels, "1 or 3");
    auto* info = fixture->add_subcommand("info", "print an OMT1 tensor header");
    info->add_option("--in", fix_in, "OMT1 file")->required();

    // selftest
    auto* st = app.add_subcommand("selftest", "run the acceptance suite");
    bool st_quick = false, st_full = false;
    st->add_flag("--quick", st_quick, "reduced trial counts");
    st->add_flag("--full", st_full, "full trial counts (default)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (threads > 0)
            set_thread_count(threads);

        if (e2c->parsed())
            return cmd_convert_e2c(conv_in, conv_out, face_size);
        if (c2e->parsed())
            return cmd_convert_c2e(conv_in, conv_out, conv_heq);
        if (unfold_cmd->parsed())
            return cmd_unfold(unf_in, unf_out, unf_center, unf_canvas);
        if (fwd->parsed()) {
            RunConfig cfg;
            if (!fwd_config.empty()) {
                std::ifstream f(fwd_config);
                if (!f)
                    throw std::runtime_error("cannot open config: " + fwd_config);
                json j;
                try {
                    j = json::parse(f);
                } catch (const json::exception& e) {
                    throw ValidationError(std::string("config: invalid JSON: ") + e.what());
                }
                apply_config_json(cfg, j);
            }
            if (fwd_seed)
                cfg.pipeline.seed = *fwd_seed;
            if (!fwd_ablation.empty())
                cfg.pipeline.ablation = ablation_from_name(fwd_ablation);
            if (threads > 0)
                cfg.threads = threads;
            if (cfg.threads > 0)
                set_thread_count(cfg.threads);
            return cmd_forward(fwd_in, fwd_out, cfg, fwd_dump);
        }
        if (eval_cmd->parsed())
            return cmd_eval(eval_pred, eval_gt, eval_out, eval_csv);
        if (gen->parsed())
            return cmd_fixture_gen(fix_out, fix_heq, fix_channels);
        if (info->parsed())
            return cmd_fixture_info(fix_in);
        if (st->parsed())
            return cmd_selftest(st_quick && !st_full);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }
    return kExitValidation;
}
