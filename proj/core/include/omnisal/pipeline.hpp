#ifndef OMNISAL_PIPELINE_HPP
#define OMNISAL_PIPELINE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "omnisal/dwf.hpp"
#include "omnisal/fr.hpp"
#include "omnisal/projection.hpp"
#include "omnisal/tensor.hpp"

namespace omnisal {

/// Structural ablations mirroring the experiment switches: drop the CU
/// branches, replace DWF by addition, replace FR by concat+conv, force equal
/// WAF weights, or feed six individual faces instead of four unfoldings.
enum class Ablation { None, NoCu, NoDwf, NoFr, NoWaf, SixFaces };

const char* ablation_name(Ablation a);
Ablation ablation_from_name(const std::string& name);

struct PipelineConfig {
    std::uint64_t seed = 42;
    int input_channels = 1;
    std::array<int, 5> encoder_channels = {8, 16, 32, 48, 64};
    std::array<int, 3> fr_out_channels = {64, 32, 16}; // levels k = 4, 3, 2
    DwfOptions dwf;
    FrOptions fr;
    Ablation ablation = Ablation::None;
};

/// Stand-in for a full-scale pretrained backbone: five stages of
/// conv3x3 -> relu -> 2x2 average pool, fully convolutional, one parameter
/// set shared by the EP branch and every CU strip.
struct EncoderStubParams {
    std::array<ConvParams, 5> stages;
    static EncoderStubParams seeded(int in_channels, const std::array<int, 5>& widths, Rng& rng);
};

/// Every parameter of the forward pass, derived deterministically from the
/// config seed. All blocks are generated regardless of the ablation so that
/// ablated runs share weights with the full model.
struct PipelineParams {
    PipelineConfig config;
    EncoderStubParams encoder;
    DwfParams dwf;
    std::array<FrParams, 3> fr;        // k = 4, 3, 2
    std::array<ConvParams, 3> side_head; // fr_out[k] -> 1
    ConvParams final_head;             // fr_out[2] -> 1
    std::array<ConvParams, 3> nofr_fuse; // concat fallback of the NoFr ablation

    static PipelineParams seeded(const PipelineConfig& config);
};

struct ShapeLogEntry {
    std::string name;
    int channels = 0, height = 0, width = 0;
};

struct ForwardOutput {
    Tensor final_map;                 // (1, Heq, Weq), sigmoid applied after upsample
    std::vector<Tensor> side_outputs; // k = 4, 3, 2 at 1/16, 1/8, 1/4 scale
    FusionWeights fusion_weights;
    bool has_fusion_weights = false;
    std::vector<ShapeLogEntry> shapes;
};

/// Optional sink receiving every logged intermediate tensor.
using TensorSink = std::function<void(const std::string&, const Tensor&)>;

/// Deterministic forward pass. Requires width = 2 * height, height divisible
/// by 32, and channels matching the config.
ForwardOutput forward(const Tensor& ep, const PipelineParams& params,
                      const TensorSink& dump = nullptr);

} // namespace omnisal

#endif
