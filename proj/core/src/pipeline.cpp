#include "omnisal/pipeline.hpp"

#include <stdexcept>

namespace omnisal {

namespace {

void require(bool ok, const std::string& what) {
    if (!ok)
        throw std::invalid_argument(what);
}

constexpr std::array<Face, 4> kCuCenters = {Face::F, Face::R, Face::B, Face::L};

struct Logger {
    std::vector<ShapeLogEntry>* shapes;
    const TensorSink* dump;

    void operator()(const std::string& name, const Tensor& t) const {
        shapes->push_back({name, t.channels(), t.height(), t.width()});
        if (dump && *dump)
            (*dump)(name, t);
    }
};

Tensor run_stage(const Tensor& x, const ConvParams& p) {
    return avg_pool2(relu(conv3x3(x, p)));
}

/// Stages [from, to) of the encoder, logging each output.
Tensor run_stages(Tensor x, const EncoderStubParams& enc, int from, int to,
                  const std::string& branch, const Logger& log) {
    for (int s = from; s < to; ++s) {
        x = run_stage(x, enc.stages[static_cast<std::size_t>(s)]);
        log(branch + ".stage" + std::to_string(s + 1), x);
    }
    return x;
}

} // namespace

const char* ablation_name(Ablation a) {
    switch (a) {
    case Ablation::None:
        return "none";
    case Ablation::NoCu:
        return "no_cu";
    case Ablation::NoDwf:
        return "no_dwf";
    case Ablation::NoFr:
        return "no_fr";
    case Ablation::NoWaf:
        return "no_waf";
    case Ablation::SixFaces:
        return "six_faces";
    }
    return "none";
}

Ablation ablation_from_name(const std::string& name) {
    for (Ablation a : {Ablation::None, Ablation::NoCu, Ablation::NoDwf, Ablation::NoFr,
                       Ablation::NoWaf, Ablation::SixFaces})
        if (name == ablation_name(a))
            return a;
    throw std::invalid_argument("unknown ablation: " + name);
}

EncoderStubParams EncoderStubParams::seeded(int in_channels, const std::array<int, 5>& widths,
                                            Rng& rng) {
    EncoderStubParams p;
    int c = in_channels;
    for (int s = 0; s < 5; ++s) {
        p.stages[static_cast<std::size_t>(s)] =
            ConvParams::seeded(c, widths[static_cast<std::size_t>(s)], rng, ConvParams::kReluGain);
        c = widths[static_cast<std::size_t>(s)];
    }
    return p;
}

PipelineParams PipelineParams::seeded(const PipelineConfig& config) {
    PipelineParams p;
    p.config = config;
    Rng master(config.seed);
    Rng enc_rng = master.fork(1);
    Rng dwf_rng = master.fork(2);
    Rng fr_rng = master.fork(3);
    Rng head_rng = master.fork(4);
    Rng nofr_rng = master.fork(5);

    p.encoder = EncoderStubParams::seeded(config.input_channels, config.encoder_channels, enc_rng);
    p.dwf = DwfParams::seeded(config.encoder_channels[4], dwf_rng.next_u64(), config.dwf);

    // Levels k = 4, 3, 2: the decoder input of level 4 is the DWF output.
    const std::array<int, 3> enc_in = {config.encoder_channels[3], config.encoder_channels[2],
                                       config.encoder_channels[1]};
    int dec_in = config.encoder_channels[4];
    for (int level = 0; level < 3; ++level) {
        FrLevelConfig cfg;
        cfg.decoder_in = dec_in;
        cfg.encoder_in = enc_in[static_cast<std::size_t>(level)];
        cfg.out = config.fr_out_channels[static_cast<std::size_t>(level)];
        cfg.mid = std::max(cfg.out / 2, 1);
        cfg.encoder_mid = std::max(cfg.out / 2, 1);
        p.fr[static_cast<std::size_t>(level)] = FrParams::seeded(cfg, fr_rng.next_u64(), config.fr);
        dec_in = cfg.out;
    }

    for (int level = 0; level < 3; ++level)
        p.side_head[static_cast<std::size_t>(level)] =
            ConvParams::seeded(config.fr_out_channels[static_cast<std::size_t>(level)], 1, head_rng,
                               ConvParams::kReluGain);
    p.final_head = ConvParams::seeded(config.fr_out_channels[2], 1, head_rng, ConvParams::kReluGain);

    dec_in = config.encoder_channels[4];
    for (int level = 0; level < 3; ++level) {
        const int in = 5 * enc_in[static_cast<std::size_t>(level)] + dec_in;
        p.nofr_fuse[static_cast<std::size_t>(level)] =
            ConvParams::seeded(in, config.fr_out_channels[static_cast<std::size_t>(level)], nofr_rng,
                               ConvParams::kReluGain);
        dec_in = config.fr_out_channels[static_cast<std::size_t>(level)];
    }
    return p;
}

ForwardOutput forward(const Tensor& ep, const PipelineParams& params, const TensorSink& dump) {
    const PipelineConfig& cfg = params.config;
    require(ep.channels() == cfg.input_channels, "forward: input channels do not match config");
    require(ep.width() == 2 * ep.height(), "forward: width must equal 2 * height");
    require(ep.height() % 32 == 0, "forward: height must be divisible by 32");

    ForwardOutput out;
    Logger log{&out.shapes, &dump};
    log("input", ep);

    const int heq = ep.height();
    const int side = ep.width() / 4;
    const Ablation ab = cfg.ablation;
    const bool use_cu = ab != Ablation::NoCu;
    const bool six_faces = ab == Ablation::SixFaces;

    // EP branch, stages 1-5.
    const Tensor e1 = run_stages(ep, params.encoder, 0, 1, "ep", log);
    const Tensor e2 = run_stages(e1, params.encoder, 1, 2, "ep", log);
    const Tensor e3 = run_stages(e2, params.encoder, 2, 3, "ep", log);
    const Tensor e4 = run_stages(e3, params.encoder, 3, 4, "ep", log);
    const Tensor e5 = run_stages(e4, params.encoder, 4, 5, "ep", log);

    // Cube branches: strips (or single faces) through stages 1-2, CEP back to
    // EP form, then stages 3-5 on the merged tensors.
    std::vector<Tensor> cu2, cu3, cu4, cu5;
    if (use_cu && !six_faces) {
        const CubeFaceSet faces = ep_to_cube(ep, side);
        for (int i = 0; i < 4; ++i) {
            const std::string branch = "cu" + std::to_string(i + 1);
            const CUPair pair = unfold(faces, kCuCenters[static_cast<std::size_t>(i)]);
            const Tensor h2 = run_stages(pair.horizontal, params.encoder, 0, 2, branch + ".h", log);
            const Tensor v2 = run_stages(pair.vertical, params.encoder, 0, 2, branch + ".v", log);
            Tensor merged = cep_merge(h2, v2, pair.layout, heq / 4);
            log(branch + ".cep", merged);
            cu3.push_back(run_stages(merged, params.encoder, 2, 3, branch, log));
            cu4.push_back(run_stages(cu3.back(), params.encoder, 3, 4, branch, log));
            cu5.push_back(run_stages(cu4.back(), params.encoder, 4, 5, branch, log));
            cu2.push_back(std::move(merged));
        }
    } else if (six_faces) {
        const CubeFaceSet faces = ep_to_cube(ep, side);
        CubeFaceSet feat2;
        feat2.side = side / 4;
        for (int f = 0; f < kFaceCount; ++f) {
            const std::string branch = std::string("face") + face_name(static_cast<Face>(f));
            feat2.faces[static_cast<std::size_t>(f)] =
                run_stages(faces.faces[static_cast<std::size_t>(f)], params.encoder, 0, 2, branch, log);
        }
        Tensor merged = cube_to_ep(feat2, heq / 4);
        log("cube.cep", merged);
        cu3.push_back(run_stages(merged, params.encoder, 2, 3, "cube", log));
        cu4.push_back(run_stages(cu3.back(), params.encoder, 3, 4, "cube", log));
        cu5.push_back(run_stages(cu4.back(), params.encoder, 4, 5, "cube", log));
        cu2.push_back(std::move(merged));
    }

    // Fusion at the deepest level.
    Tensor fused;
    switch (ab) {
    case Ablation::NoCu:
        fused = e5;
        break;
    case Ablation::NoDwf: {
        fused = e5;
        for (const Tensor& c5 : cu5)
            fused = add(fused, c5);
        break;
    }
    case Ablation::NoWaf: {
        fused = e5;
        for (int i = 0; i < 4; ++i) {
            const GefResult g = gef(e5, cu5[static_cast<std::size_t>(i)], params.dwf.gef_for(i));
            fused = add(fused, scale(g.fused, 0.25f));
        }
        out.fusion_weights = FusionWeights{};
        out.has_fusion_weights = true;
        break;
    }
    case Ablation::SixFaces: {
        const GefResult g = gef(e5, cu5[0], params.dwf.gef_for(0));
        fused = add(e5, g.fused);
        break;
    }
    default: {
        const DwfResult r = dwf_fuse(e5, cu5, params.dwf);
        fused = r.fused;
        out.fusion_weights = r.weights;
        out.has_fusion_weights = true;
        break;
    }
    }
    log("fused", fused);

    // Decoder: three FR levels (k = 4, 3, 2).
    const std::array<const std::vector<Tensor>*, 3> cu_levels = {&cu4, &cu3, &cu2};
    const std::array<const Tensor*, 3> ep_levels = {&e4, &e3, &e2};
    Tensor decoder = std::move(fused);
    for (int level = 0; level < 3; ++level) {
        const int k = 4 - level;
        const FrParams& fr = params.fr[static_cast<std::size_t>(level)];
        const std::vector<Tensor>& cus = *cu_levels[static_cast<std::size_t>(level)];
        const Tensor& epk = *ep_levels[static_cast<std::size_t>(level)];
        Tensor next;
        if (ab == Ablation::NoFr) {
            std::vector<Tensor> cat(cus.begin(), cus.end());
            cat.push_back(epk);
            cat.push_back(bilinear_upsample(decoder, 2));
            next = relu(conv3x3(concat_channels(cat), params.nofr_fuse[static_cast<std::size_t>(level)]));
        } else if (ab == Ablation::NoCu) {
            const std::array<Tensor, 1> encoders = {epk};
            const std::array<FrSource, 1> sources = {FrSource::E};
            next = fr_module_partial(decoder, encoders, sources, fr);
        } else if (six_faces) {
            const std::array<Tensor, 2> encoders = {cus[0], epk};
            const std::array<FrSource, 2> sources = {FrSource::C1, FrSource::E};
            next = fr_module_partial(decoder, encoders, sources, fr);
        } else {
            FrLevelInputs inputs;
            inputs.decoder = decoder;
            for (int i = 0; i < 4; ++i)
                inputs.encoders[static_cast<std::size_t>(i)] = cus[static_cast<std::size_t>(i)];
            inputs.encoders[4] = epk;
            next = fr_module(inputs, fr);
        }
        decoder = std::move(next);
        log("decoder.k" + std::to_string(k), decoder);
        Tensor side = sigmoid(conv3x3(decoder, params.side_head[static_cast<std::size_t>(level)]));
        log("side.k" + std::to_string(k), side);
        out.side_outputs.push_back(std::move(side));
    }

    // Final head: logits at 1/4 scale, upsampled to input dims, sigmoid last.
    Tensor logits = conv3x3(decoder, params.final_head);
    out.final_map = sigmoid(bilinear_upsample(logits, 4));
    log("final", out.final_map);
    return out;
}

} // namespace omnisal
