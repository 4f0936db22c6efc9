#include "riga/model/gau.h"

#include <cmath>

#include "riga/common/error.h"

namespace riga::model {

using nn::Matrix;

EdgeIndex EdgeIndex::from_graph(const ResidueGraph& graph) {
    EdgeIndex idx;
    idx.n = graph.n;
    idx.k = graph.k;
    idx.receivers = nn::make_index(graph.receivers());
    idx.neighbors = nn::make_index(graph.neighbors);
    idx.reverse = nn::make_index(graph.reverse_edges());
    return idx;
}

template <typename T>
GauParams<T> GauParams<T>::create(nn::ParamStore<T>& store, const std::string& name, int d, int d_e, int heads,
                                  double attention_dropout, CounterRng& rng) {
    if (heads < 1 || d % heads != 0) throw InvalidParameter("hidden dim must be divisible by the head count");
    GauParams p;
    p.w_q = store.xavier(name + ".w_q", d, d, rng);
    p.w_k = store.xavier(name + ".w_k", d_e, d, rng);
    p.w_v = store.xavier(name + ".w_v", 2 * d + d_e, d, rng);
    p.heads = heads;
    p.attention_dropout = attention_dropout;
    return p;
}

template <typename T>
AttentionOutput<T> gau_attention(const LayerState<T>& state, const EdgeIndex& edges, const GauParams<T>& p,
                                 const ForwardContext& ctx) {
    if (edges.k < 1 || edges.n < 1) throw IsolatedNode("every receiver needs at least one neighbor");
    const Eigen::Index d = state.h.cols();
    const Eigen::Index d_e = state.e.cols();
    if (p.w_v.rows() != 2 * d + d_e) throw ShapeError("W_V rows must equal 2d + d_e");
    const int dk = static_cast<int>(p.w_q.cols()) / p.heads;

    Tensor<T> q = nn::matmul(state.h, p.w_q);
    Tensor<T> k = nn::matmul(state.e, p.w_k);
    Tensor<T> scores = nn::head_dot(nn::gather_rows(q, edges.receivers), k, p.heads, T(1) / std::sqrt(T(dk)));
    Tensor<T> alpha = nn::segment_softmax(scores, edges.k);

    // W_V [h_i | e_ji | h_j] split into its three row blocks.
    Tensor<T> v_recv = nn::matmul(state.h, nn::slice_rows(p.w_v, 0, d));
    Tensor<T> v_edge = nn::matmul(state.e, nn::slice_rows(p.w_v, d, d_e));
    Tensor<T> v_nbr = nn::matmul(state.h, nn::slice_rows(p.w_v, d + d_e, d));
    Tensor<T> v = nn::add(nn::add(nn::gather_rows(v_recv, edges.receivers), v_edge), nn::gather_rows(v_nbr, edges.neighbors));

    Tensor<T> weights = nn::dropout(alpha, p.attention_dropout, ctx.rng, ctx.training);
    return {nn::segment_weighted_sum(weights, v, edges.k), alpha};
}

template <typename T>
Tensor<T> edge_update(const LayerState<T>& state, const EdgeIndex& edges, const nn::Mlp<T>& mlp,
                      const ForwardContext& ctx) {
    const Eigen::Index d = state.h.cols();
    const Eigen::Index d_e = state.e.cols();
    const auto& first = mlp.layers.front();
    if (first.weight.rows() != 2 * d + d_e) throw ShapeError("edge MLP input width must equal 2d + d_e");

    // First layer on [h_i | h_j | e_ji], applied block-wise.
    Tensor<T> pre = nn::add(
        nn::add(nn::gather_rows(nn::matmul(state.h, nn::slice_rows(first.weight, 0, d)), edges.receivers),
                nn::gather_rows(nn::matmul(state.h, nn::slice_rows(first.weight, d, d)), edges.neighbors)),
        nn::matmul(state.e, nn::slice_rows(first.weight, 2 * d, d_e)));
    if (first.bias.defined()) pre = nn::add_bias(pre, first.bias);

    Tensor<T> out = pre;
    for (std::size_t l = 1; l < mlp.layers.size(); ++l) {
        out = nn::dropout(mlp.activate(out), mlp.dropout_rate, ctx.rng, ctx.training);
        out = mlp.layers[l].forward(out);
    }
    if (out.cols() != d_e) throw ShapeError("edge MLP output width must equal d_e");
    return nn::add(state.e, out);
}

template <typename T>
BridgeParams<T> BridgeParams<T>::create(nn::ParamStore<T>& store, const std::string& name, int d,
                                        nn::Activation act, double dropout, bool scalar_softmax, CounterRng& rng) {
    BridgeParams p;
    p.scalar_softmax = scalar_softmax;
    p.w_att = store.xavier(name + ".w_att", d, scalar_softmax ? 1 : d, rng);
    p.w_val = store.xavier(name + ".w_val", d, d, rng);
    p.mlp_up = nn::Mlp<T>::create(store, name + ".mlp_up", {2 * d, d, d}, act, dropout, rng);
    p.mlp_in = nn::Mlp<T>::create(store, name + ".mlp_in", {d, d, d}, act, dropout, rng);
    p.mlp_out = nn::Mlp<T>::create(store, name + ".mlp_out", {d, d, d}, act, dropout, rng);
    return p;
}

template <typename T>
BridgeOutput<T> global_context_bridge(const Tensor<T>& h_local, const BridgeParams<T>& p, const ForwardContext& ctx) {
    const Eigen::Index n = h_local.rows();
    const Eigen::Index d = h_local.cols();
    if (n < 1) throw InvalidParameter("global context bridge needs at least one node");
    Tensor<T> alpha = nn::column_softmax(nn::matmul(h_local, p.w_att));
    Tensor<T> weights = alpha;
    if (p.scalar_softmax) weights = nn::matmul(alpha, Tensor<T>(Matrix<T>::Ones(1, d)));
    Tensor<T> g_pool = nn::sum_rows(nn::mul(weights, nn::matmul(h_local, p.w_val)));
    Tensor<T> u = p.mlp_up.forward(nn::concat_cols<T>({h_local, nn::broadcast_rows(g_pool, n)}), ctx);
    Tensor<T> z = nn::mul(u, nn::sigmoid(p.mlp_in.forward(h_local, ctx)));
    Tensor<T> h_out = nn::mul(h_local, nn::sigmoid(p.mlp_out.forward(z, ctx)));
    return {h_out, g_pool, alpha};
}

template <typename T>
EncoderLayer<T> EncoderLayer<T>::create(nn::ParamStore<T>& store, const std::string& name, const EncoderConfig& cfg,
                                        CounterRng& rng) {
    const int d = cfg.hidden_dim;
    EncoderLayer layer;
    layer.norm = nn::LayerNorm<T>::create(store, name + ".norm", d);
    layer.gau = GauParams<T>::create(store, name + ".gau", d, d, cfg.heads, cfg.dropout, rng);
    layer.edge_mlp = nn::Mlp<T>::create(store, name + ".edge_mlp", {3 * d, d, d}, cfg.activation, cfg.dropout, rng);
    layer.bridge = BridgeParams<T>::create(store, name + ".bridge", d, cfg.activation, cfg.dropout,
                                           cfg.bridge_scalar_softmax, rng);
    layer.use_bridge = cfg.use_bridge;
    layer.directional_edges = cfg.directional_edges;
    return layer;
}

template <typename T>
LayerOutput<T> EncoderLayer<T>::forward(const LayerState<T>& state, const EdgeIndex& edges, const ForwardContext& ctx,
                                        bool update_edges) const {
    LayerState<T> normed{norm.forward(state.h), state.e, state.layer_index};
    AttentionOutput<T> att = gau_attention(normed, edges, gau, ctx);

    LayerOutput<T> out;
    out.alpha = att.alpha;
    Tensor<T> h_out = att.h_local;
    if (use_bridge) {
        BridgeOutput<T> b = global_context_bridge(att.h_local, bridge, ctx);
        h_out = b.h_out;
        out.g_pool = b.g_pool;
    }
    out.state.h = nn::add(state.h, h_out);
    out.state.e = state.e;
    if (update_edges) {
        out.state.e = edge_update(normed, edges, edge_mlp, ctx);
        if (!directional_edges) out.state.e = nn::pair_average_rows(out.state.e, edges.reverse);
    }
    out.state.layer_index = state.layer_index + 1;
    return out;
}

template <typename T>
EncoderStack<T> EncoderStack<T>::create(nn::ParamStore<T>& store, const std::string& name, const EncoderConfig& cfg,
                                        CounterRng& rng) {
    if (cfg.depth < 0) throw InvalidParameter("encoder depth must be >= 0");
    EncoderStack stack;
    for (int l = 0; l < cfg.depth; ++l)
        stack.layers.push_back(EncoderLayer<T>::create(store, name + ".layer" + std::to_string(l), cfg, rng));
    return stack;
}

template <typename T>
StackOutput<T> EncoderStack<T>::forward(const LayerState<T>& input, const EdgeIndex& edges, const ForwardContext& ctx,
                                        bool final_edge_update) const {
    StackOutput<T> out;
    out.state = input;
    out.node_states.push_back(input.h);
    for (std::size_t l = 0; l < layers.size(); ++l) {
        const bool update = final_edge_update || l + 1 < layers.size();
        LayerOutput<T> lo = layers[l].forward(out.state, edges, ctx, update);
        out.state = lo.state;
        out.alphas.push_back(lo.alpha);
        out.node_states.push_back(lo.state.h);
    }
    return out;
}

#define RIGA_INSTANTIATE_GAU(T)                                                                                   \
    template struct GauParams<T>;                                                                                 \
    template struct BridgeParams<T>;                                                                              \
    template struct EncoderLayer<T>;                                                                              \
    template struct EncoderStack<T>;                                                                              \
    template AttentionOutput<T> gau_attention(const LayerState<T>&, const EdgeIndex&, const GauParams<T>&,       \
                                              const ForwardContext&);                                             \
    template Tensor<T> edge_update(const LayerState<T>&, const EdgeIndex&, const nn::Mlp<T>&, const ForwardContext&); \
    template BridgeOutput<T> global_context_bridge(const Tensor<T>&, const BridgeParams<T>&, const ForwardContext&);

RIGA_INSTANTIATE_GAU(float)
RIGA_INSTANTIATE_GAU(double)

#undef RIGA_INSTANTIATE_GAU

}  // namespace riga::model
