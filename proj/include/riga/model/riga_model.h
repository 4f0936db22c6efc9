#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include <json.hpp>

#include "riga/model/gau.h"
#include "riga/model/providers.h"

namespace riga::model {

struct ModelConfig {
    int node_in = 119;
    int edge_in = 325;
    EncoderConfig encoder;
    int struct_dim = 512;
    int seq_dim = 320;
    bool per_stage_params = false;
    int stages = 3;  // module count in per-stage mode

    void validate() const;
    nlohmann::json to_json() const;
    /// Unknown keys throw ConfigError naming the key.
    static ModelConfig from_json(const nlohmann::json& j);
};

template <typename T>
struct Decoder {
    nn::LayerNorm<T> norm;
    nn::Mlp<T> tuning;  // two layers of width d
    nn::Linear<T> head;  // d -> 20

    static Decoder create(nn::ParamStore<T>& store, const std::string& name, int d, nn::Activation act,
                          double dropout, CounterRng& rng);
    Tensor<T> forward(const Tensor<T>& h, const ForwardContext& ctx) const;
};

template <typename T>
struct StageModule {
    nn::Linear<T> input_proj;  // fused width -> d
    EncoderStack<T> stack;
    Decoder<T> decoder;
};

/// Geometry embeddings computed once per protein and reused by every stage.
template <typename T>
struct GeometryEncoding {
    Tensor<T> h_geom;  // n x d
    Tensor<T> e_geom;  // n*k x d
};

template <typename T>
struct StageOutput {
    Tensor<T> logits;  // n x 20
    StackOutput<T> stack;
};

/// Row-wise [h_geom | e_if | e_seq]. Throws ShapeError when a prior's row
/// count or residue positions disagree with the graph.
template <typename T>
Tensor<T> fuse(const Tensor<T>& h_geom, const PriorEmbedding& e_if, const PriorEmbedding& e_seq);

template <typename T>
class RigaModel {
public:
    RigaModel(const ModelConfig& cfg, std::uint64_t seed);
    RigaModel(const RigaModel&) = delete;
    RigaModel& operator=(const RigaModel&) = delete;

    const ModelConfig& config() const { return cfg_; }
    nn::ParamStore<T>& params() { return store_; }
    const nn::ParamStore<T>& params() const { return store_; }

    GeometryEncoding<T> encode_geometry(const ResidueGraph& graph) const;
    /// Stage t (0-based) on the fused input.
    StageOutput<T> run_stage(int stage, const GeometryEncoding<T>& geom, const Tensor<T>& fused,
                             const EdgeIndex& edges, const ForwardContext& ctx) const;
    const StageModule<T>& module_for(int stage) const;

private:
    ModelConfig cfg_;
    nn::ParamStore<T> store_;
    nn::Linear<T> node_embed_;
    nn::Linear<T> edge_embed_;
    std::vector<StageModule<T>> stages_;
};

struct SequenceDistribution {
    RowMatrixXd probs;  // n x 20
    int stage = 1;
};

struct PredictedSequence {
    std::vector<AminoAcid> tokens;
    int stage = 1;
};

SequenceDistribution decode_logits(const RowMatrixXd& logits, int stage);
/// Per-row argmax, lowest class index on ties.
PredictedSequence argmax_sequence(const SequenceDistribution& dist);

template <typename T>
struct RecycleTrace {
    std::vector<Tensor<T>> logits;                   // one per stage
    std::vector<std::vector<AminoAcid>> sequences;   // S_t fed to stage t+1
    std::vector<StackOutput<T>> stacks;
};

/**
 * Cascaded recycling with gradients kept: stage 1 sees the all-MASK
 * sequence prior, stage t > 1 the prior of argmax(P_{t-1}). The structure
 * prior and geometry encoding are computed once.
 */
template <typename T>
RecycleTrace<T> recycle_forward(const RigaModel<T>& model, const ResidueGraph& graph,
                                const PriorEmbedding& structure_prior, const EmbeddingProvider& sequence_provider,
                                int recycles, const ForwardContext& ctx);

struct RecycleResult {
    std::vector<SequenceDistribution> stages;
    PredictedSequence final_sequence;
    std::vector<std::vector<RowMatrixXd>> alphas;  // [stage][layer], n*k x heads
    std::vector<std::vector<RowMatrixXd>> node_states;  // [stage][layer + 1]
};

/// Evaluation-mode recycling without graph recording. T < 1 throws InvalidParameter.
template <typename T>
RecycleResult recycle_infer(const RigaModel<T>& model, const ResidueGraph& graph,
                            const EmbeddingProvider& structure_provider, const EmbeddingProvider& sequence_provider,
                            int recycles, const ProteinBackbone* backbone = nullptr);

/// Model config and parameters into a checkpoint blob.
template <typename T>
Blob model_to_blob(const RigaModel<T>& model, const CounterRng& rng, nlohmann::json extra = {}, bool float64 = true);
ModelConfig model_config_from_blob(const Blob& blob);
/// Builds a model from the checkpoint's config and loads its parameters.
template <typename T>
std::unique_ptr<RigaModel<T>> model_from_blob(const Blob& blob);

}  // namespace riga::model
