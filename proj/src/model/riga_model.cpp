#include "riga/model/riga_model.h"

#include <algorithm>

#include "riga/common/error.h"
#include "riga/nn/checkpoint.h"

namespace riga::model {

void ModelConfig::validate() const {
    const auto& e = encoder;
    if (node_in < 1 || edge_in < 1) throw InvalidParameter("feature widths must be positive");
    if (e.hidden_dim < 1 || e.depth < 1 || e.heads < 1) throw InvalidParameter("encoder sizes must be positive");
    if (e.hidden_dim % e.heads != 0) throw InvalidParameter("hidden_dim must be divisible by heads");
    if (e.dropout < 0.0 || e.dropout >= 1.0) throw InvalidParameter("dropout must lie in [0, 1)");
    if (struct_dim < 0 || seq_dim < 0) throw InvalidParameter("prior widths must be >= 0");
    if (per_stage_params && stages < 1) throw InvalidParameter("stages must be >= 1");
}

nlohmann::json ModelConfig::to_json() const {
    return {{"node_in", node_in},
            {"edge_in", edge_in},
            {"hidden_dim", encoder.hidden_dim},
            {"heads", encoder.heads},
            {"depth", encoder.depth},
            {"dropout", encoder.dropout},
            {"activation", nn::to_string(encoder.activation)},
            {"use_bridge", encoder.use_bridge},
            {"directional_edges", encoder.directional_edges},
            {"bridge_scalar_softmax", encoder.bridge_scalar_softmax},
            {"struct_dim", struct_dim},
            {"seq_dim", seq_dim},
            {"per_stage_params", per_stage_params},
            {"stages", stages}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
    ModelConfig c;
    if (!j.is_object()) throw ConfigError("model config must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "node_in") c.node_in = v.get<int>();
            else if (key == "edge_in") c.edge_in = v.get<int>();
            else if (key == "hidden_dim") c.encoder.hidden_dim = v.get<int>();
            else if (key == "heads") c.encoder.heads = v.get<int>();
            else if (key == "depth") c.encoder.depth = v.get<int>();
            else if (key == "dropout") c.encoder.dropout = v.get<double>();
            else if (key == "activation") c.encoder.activation = nn::activation_from_string(v.get<std::string>());
            else if (key == "use_bridge") c.encoder.use_bridge = v.get<bool>();
            else if (key == "directional_edges") c.encoder.directional_edges = v.get<bool>();
            else if (key == "bridge_scalar_softmax") c.encoder.bridge_scalar_softmax = v.get<bool>();
            else if (key == "struct_dim") c.struct_dim = v.get<int>();
            else if (key == "seq_dim") c.seq_dim = v.get<int>();
            else if (key == "per_stage_params") c.per_stage_params = v.get<bool>();
            else if (key == "stages") c.stages = v.get<int>();
            else throw ConfigError("unknown model config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad model config value: ") + e.what());
    }
    c.validate();
    return c;
}

template <typename T>
Decoder<T> Decoder<T>::create(nn::ParamStore<T>& store, const std::string& name, int d, nn::Activation act,
                              double dropout, CounterRng& rng) {
    Decoder dec;
    dec.norm = nn::LayerNorm<T>::create(store, name + ".norm", d);
    dec.tuning = nn::Mlp<T>::create(store, name + ".tuning", {d, d, d}, act, dropout, rng);
    dec.head = nn::Linear<T>::create(store, name + ".head", d, 20, rng);
    return dec;
}

template <typename T>
Tensor<T> Decoder<T>::forward(const Tensor<T>& h, const ForwardContext& ctx) const {
    Tensor<T> z = tuning.activate(tuning.forward(norm.forward(h), ctx));
    return head.forward(z);
}

namespace {

void check_prior(const PriorEmbedding& p, Eigen::Index n, int dim, const char* what) {
    if (p.values.rows() != n)
        throw ShapeError(std::string(what) + " prior has " + std::to_string(p.values.rows()) + " rows, graph has " +
                         std::to_string(n));
    if (dim >= 0 && p.values.cols() != dim)
        throw ShapeError(std::string(what) + " prior width " + std::to_string(p.values.cols()) + " != expected " +
                         std::to_string(dim));
    if (!p.positions.empty()) {
        if (static_cast<Eigen::Index>(p.positions.size()) != n)
            throw ShapeError(std::string(what) + " prior position list has the wrong length");
        for (Eigen::Index i = 0; i < n; ++i)
            if (p.positions[static_cast<std::size_t>(i)] != i)
                throw ShapeError(std::string(what) + " prior rows are not in residue order (row " +
                                 std::to_string(i) + " describes residue " +
                                 std::to_string(p.positions[static_cast<std::size_t>(i)]) + ")");
    }
}

template <typename T>
Tensor<T> constant(const RowMatrixXd& m) {
    return Tensor<T>(m.cast<T>(), false);
}

}  // namespace

template <typename T>
Tensor<T> fuse(const Tensor<T>& h_geom, const PriorEmbedding& e_if, const PriorEmbedding& e_seq) {
    check_prior(e_if, h_geom.rows(), -1, "structure");
    check_prior(e_seq, h_geom.rows(), -1, "sequence");
    return nn::concat_cols<T>({h_geom, constant<T>(e_if.values), constant<T>(e_seq.values)});
}

template <typename T>
RigaModel<T>::RigaModel(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
    cfg_.validate();
    CounterRng rng(seed);
    const int d = cfg_.encoder.hidden_dim;
    node_embed_ = nn::Linear<T>::create(store_, "node_embed", cfg_.node_in, d, rng);
    edge_embed_ = nn::Linear<T>::create(store_, "edge_embed", cfg_.edge_in, d, rng);
    const int count = cfg_.per_stage_params ? cfg_.stages : 1;
    const int fused = d + cfg_.struct_dim + cfg_.seq_dim;
    for (int s = 0; s < count; ++s) {
        const std::string prefix = count == 1 ? std::string("stage") : "stage" + std::to_string(s);
        StageModule<T> m;
        m.input_proj = nn::Linear<T>::create(store_, prefix + ".input_proj", fused, d, rng);
        m.stack = EncoderStack<T>::create(store_, prefix + ".encoder", cfg_.encoder, rng);
        m.decoder = Decoder<T>::create(store_, prefix + ".decoder", d, cfg_.encoder.activation, cfg_.encoder.dropout, rng);
        stages_.push_back(std::move(m));
    }
}

template <typename T>
const StageModule<T>& RigaModel<T>::module_for(int stage) const {
    if (stage < 0) throw InvalidParameter("stage index must be >= 0");
    if (!cfg_.per_stage_params) return stages_.front();
    if (stage >= static_cast<int>(stages_.size()))
        throw InvalidParameter("per-stage model has " + std::to_string(stages_.size()) + " stage modules, stage " +
                               std::to_string(stage + 1) + " requested");
    return stages_[static_cast<std::size_t>(stage)];
}

template <typename T>
GeometryEncoding<T> RigaModel<T>::encode_geometry(const ResidueGraph& graph) const {
    if (graph.node_feats.cols() != cfg_.node_in || graph.edge_feats.cols() != cfg_.edge_in)
        throw ShapeError("graph feature widths (" + std::to_string(graph.node_feats.cols()) + ", " +
                         std::to_string(graph.edge_feats.cols()) + ") do not match the model (" +
                         std::to_string(cfg_.node_in) + ", " + std::to_string(cfg_.edge_in) + ")");
    GeometryEncoding<T> g;
    g.h_geom = node_embed_.forward(constant<T>(graph.node_feats));
    g.e_geom = edge_embed_.forward(constant<T>(graph.edge_feats));
    return g;
}

template <typename T>
StageOutput<T> RigaModel<T>::run_stage(int stage, const GeometryEncoding<T>& geom, const Tensor<T>& fused,
                                       const EdgeIndex& edges, const ForwardContext& ctx) const {
    const StageModule<T>& m = module_for(stage);
    LayerState<T> input;
    input.h = m.input_proj.forward(fused);
    input.e = cfg_.encoder.directional_edges ? geom.e_geom : nn::pair_average_rows(geom.e_geom, edges.reverse);
    StageOutput<T> out;
    out.stack = m.stack.forward(input, edges, ctx);
    out.logits = m.decoder.forward(out.stack.state.h, ctx);
    return out;
}

SequenceDistribution decode_logits(const RowMatrixXd& logits, int stage) {
    SequenceDistribution d;
    d.stage = stage;
    d.probs.resize(logits.rows(), logits.cols());
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        const auto p = nn::softmax<double>(std::span<const double>(logits.row(i).data(), logits.cols()));
        for (Eigen::Index c = 0; c < logits.cols(); ++c) d.probs(i, c) = p[static_cast<std::size_t>(c)];
    }
    return d;
}

PredictedSequence argmax_sequence(const SequenceDistribution& dist) {
    PredictedSequence s;
    s.stage = dist.stage;
    s.tokens.resize(static_cast<std::size_t>(dist.probs.rows()));
    for (Eigen::Index i = 0; i < dist.probs.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < dist.probs.cols(); ++c)
            if (dist.probs(i, c) > dist.probs(i, best)) best = c;
        s.tokens[static_cast<std::size_t>(i)] = static_cast<AminoAcid>(best);
    }
    return s;
}

namespace {

std::vector<AminoAcid> argmax_tokens(const RowMatrixXd& logits) {
    std::vector<AminoAcid> out(static_cast<std::size_t>(logits.rows()));
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index c = 1; c < logits.cols(); ++c)
            if (logits(i, c) > logits(i, best)) best = c;
        out[static_cast<std::size_t>(i)] = static_cast<AminoAcid>(best);
    }
    return out;
}

}  // namespace

template <typename T>
RecycleTrace<T> recycle_forward(const RigaModel<T>& model, const ResidueGraph& graph,
                                const PriorEmbedding& structure_prior, const EmbeddingProvider& sequence_provider,
                                int recycles, const ForwardContext& ctx) {
    if (recycles < 1) throw InvalidParameter("recycle count must be >= 1");
    if (sequence_provider.kind() != PriorKind::Sequence)
        throw InvalidParameter("provider '" + sequence_provider.tag() + "' is not a sequence prior");
    const auto& cfg = model.config();
    check_prior(structure_prior, graph.n, cfg.struct_dim, "structure");
    const EdgeIndex edges = EdgeIndex::from_graph(graph);
    const GeometryEncoding<T> geom = model.encode_geometry(graph);

    RecycleTrace<T> trace;
    std::vector<AminoAcid> tokens(static_cast<std::size_t>(graph.n), kMask);
    for (int t = 0; t < recycles; ++t) {
        const PriorEmbedding seq_prior = sequence_provider.embed_sequence(tokens);
        check_prior(seq_prior, graph.n, cfg.seq_dim, "sequence");
        const Tensor<T> fused = fuse(geom.h_geom, structure_prior, seq_prior);
        StageOutput<T> out = model.run_stage(t, geom, fused, edges, ctx);
        tokens = argmax_tokens(out.logits.value().template cast<double>());
        trace.logits.push_back(out.logits);
        trace.sequences.push_back(tokens);
        trace.stacks.push_back(std::move(out.stack));
    }
    return trace;
}

template <typename T>
RecycleResult recycle_infer(const RigaModel<T>& model, const ResidueGraph& graph,
                            const EmbeddingProvider& structure_provider, const EmbeddingProvider& sequence_provider,
                            int recycles, const ProteinBackbone* backbone) {
    if (recycles < 1) throw InvalidParameter("recycle count must be >= 1");
    if (structure_provider.kind() != PriorKind::Structure)
        throw InvalidParameter("provider '" + structure_provider.tag() + "' is not a structure prior");
    nn::NoGradGuard guard;
    const PriorEmbedding structure_prior = structure_provider.embed_structure(graph.n, backbone);
    const RecycleTrace<T> trace =
        recycle_forward(model, graph, structure_prior, sequence_provider, recycles, ForwardContext{});
    RecycleResult result;
    for (int t = 0; t < recycles; ++t) {
        const auto& tr = trace.stacks[static_cast<std::size_t>(t)];
        result.stages.push_back(
            decode_logits(trace.logits[static_cast<std::size_t>(t)].value().template cast<double>(), t + 1));
        std::vector<RowMatrixXd> alphas, states;
        for (const auto& a : tr.alphas) alphas.push_back(a.value().template cast<double>());
        for (const auto& h : tr.node_states) states.push_back(h.value().template cast<double>());
        result.alphas.push_back(std::move(alphas));
        result.node_states.push_back(std::move(states));
    }
    result.final_sequence = argmax_sequence(result.stages.back());
    return result;
}

template <typename T>
Blob model_to_blob(const RigaModel<T>& model, const CounterRng& rng, nlohmann::json extra, bool float64) {
    if (!extra.is_object()) extra = nlohmann::json::object();
    extra["model"] = model.config().to_json();
    return nn::params_to_blob(model.params(), rng, extra, float64);
}

ModelConfig model_config_from_blob(const Blob& blob) {
    if (!blob.header.contains("model")) throw ParseError("checkpoint has no model config");
    return ModelConfig::from_json(blob.header["model"]);
}

template <typename T>
std::unique_ptr<RigaModel<T>> model_from_blob(const Blob& blob) {
    auto model = std::make_unique<RigaModel<T>>(model_config_from_blob(blob), 0);
    nn::load_params(model->params(), blob);
    return model;
}

#define RIGA_INSTANTIATE_MODEL(T)                                                                                    \
    template struct Decoder<T>;                                                                                      \
    template class RigaModel<T>;                                                                                     \
    template Tensor<T> fuse(const Tensor<T>&, const PriorEmbedding&, const PriorEmbedding&);                        \
    template RecycleTrace<T> recycle_forward(const RigaModel<T>&, const ResidueGraph&, const PriorEmbedding&,        \
                                             const EmbeddingProvider&, int, const ForwardContext&);                  \
    template RecycleResult recycle_infer(const RigaModel<T>&, const ResidueGraph&, const EmbeddingProvider&,         \
                                         const EmbeddingProvider&, int, const ProteinBackbone*);                     \
    template Blob model_to_blob(const RigaModel<T>&, const CounterRng&, nlohmann::json, bool);                       \
    template std::unique_ptr<RigaModel<T>> model_from_blob(const Blob&);

RIGA_INSTANTIATE_MODEL(float)
RIGA_INSTANTIATE_MODEL(double)

}  // namespace riga::model
