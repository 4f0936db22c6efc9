#pragma once

#include <vector>

#include "riga/geometry/features.h"
#include "riga/nn/layers.h"

namespace riga::model {

using nn::ForwardContext;
using nn::Tensor;

/// Edge topology shared by every layer: receiver-major, `k` edges per node.
struct EdgeIndex {
    int n = 0;
    int k = 0;
    nn::Index receivers;
    nn::Index neighbors;
    nn::Index reverse;  // partner edge (neighbor -> receiver swapped) or -1

    static EdgeIndex from_graph(const ResidueGraph& graph);
    int edge_count() const { return n * k; }
};

/// Node states h (n x d) and directed edge states e (n*k x d_e). Row e of
/// the edge tensor is channel neighbor(e) -> receiver(e); its reverse
/// channel is a different row with its own state.
template <typename T>
struct LayerState {
    Tensor<T> h;
    Tensor<T> e;
    int layer_index = 0;
};

template <typename T>
struct GauParams {
    Tensor<T> w_q;  // d x d
    Tensor<T> w_k;  // d_e x d
    Tensor<T> w_v;  // (2d + d_e) x d, rows ordered [h_i | e_ji | h_j]
    int heads = 1;
    double attention_dropout = 0.0;

    static GauParams create(nn::ParamStore<T>& store, const std::string& name, int d, int d_e, int heads,
                            double attention_dropout, CounterRng& rng);
};

template <typename T>
struct AttentionOutput {
    Tensor<T> h_local;  // n x d
    Tensor<T> alpha;    // n*k x heads, rows sum to 1 within each receiver block
};

/**
 * Edge-as-key attention. For receiver i and neighbor j:
 *   q_i = W_Q h_i,  k_ji = W_K e_ji,  v_ji = W_V [h_i | e_ji | h_j],
 *   alpha_ji = softmax_j(q_i · k_ji / sqrt(d_k)),  h_local_i = Σ_j alpha_ji v_ji,
 * evaluated per head on column blocks of width d_k = d / heads.
 * Throws IsolatedNode when the graph has no edges.
 */
template <typename T>
AttentionOutput<T> gau_attention(const LayerState<T>& state, const EdgeIndex& edges, const GauParams<T>& p,
                                 const ForwardContext& ctx);

/// e_ji + MLP([h_i | h_j | e_ji]) per directed channel; no channel reads another.
template <typename T>
Tensor<T> edge_update(const LayerState<T>& state, const EdgeIndex& edges, const nn::Mlp<T>& mlp,
                      const ForwardContext& ctx);

template <typename T>
struct BridgeParams {
    Tensor<T> w_att;  // d x d (d x 1 in scalar mode)
    Tensor<T> w_val;  // d x d
    nn::Mlp<T> mlp_up;
    nn::Mlp<T> mlp_in;
    nn::Mlp<T> mlp_out;
    bool scalar_softmax = false;

    static BridgeParams create(nn::ParamStore<T>& store, const std::string& name, int d, nn::Activation act,
                               double dropout, bool scalar_softmax, CounterRng& rng);
};

template <typename T>
struct BridgeOutput {
    Tensor<T> h_out;   // n x d
    Tensor<T> g_pool;  // 1 x d
    Tensor<T> alpha;   // n x d feature-wise pooling weights (n x 1 in scalar mode)
};

/**
 * Global context bridge.
 *   s_i = W_att h_i, alpha = softmax over nodes of s, separately per channel
 *   g = Σ_i alpha_i ⊙ (W_val h_i)
 *   u_i = MLP_up(h_i | g),  z_i = u_i ⊙ σ(MLP_in(h_i)),  h_out_i = h_i ⊙ σ(MLP_out(z_i))
 */
template <typename T>
BridgeOutput<T> global_context_bridge(const Tensor<T>& h_local, const BridgeParams<T>& p, const ForwardContext& ctx);

struct EncoderConfig {
    int hidden_dim = 128;
    int heads = 4;
    int depth = 5;
    double dropout = 0.1;
    nn::Activation activation = nn::Activation::Gelu;
    bool use_bridge = true;
    bool directional_edges = true;  // false: reverse channels share one averaged state
    bool bridge_scalar_softmax = false;
};

template <typename T>
struct LayerOutput {
    LayerState<T> state;
    Tensor<T> alpha;
    Tensor<T> g_pool;  // undefined when the bridge is disabled
};

/**
 * GAU -> edge update -> bridge with a pre-norm residual on nodes:
 *   a = LN(h);  (h_local, alpha) = GAU(a, e);  h' = h + Bridge(h_local)
 *   e' = edge_update(a, e)
 * The edge update reads the layer-input node states, so e'_{j->i} never
 * depends on e_{i->j}.
 */
template <typename T>
struct EncoderLayer {
    nn::LayerNorm<T> norm;
    GauParams<T> gau;
    nn::Mlp<T> edge_mlp;
    BridgeParams<T> bridge;
    bool use_bridge = true;
    bool directional_edges = true;

    static EncoderLayer create(nn::ParamStore<T>& store, const std::string& name, const EncoderConfig& cfg,
                               CounterRng& rng);
    LayerOutput<T> forward(const LayerState<T>& state, const EdgeIndex& edges, const ForwardContext& ctx,
                           bool update_edges = true) const;
};

template <typename T>
struct StackOutput {
    LayerState<T> state;
    std::vector<Tensor<T>> alphas;       // per layer, n*k x heads
    std::vector<Tensor<T>> node_states;  // input to layer 1, then output of each layer
};

template <typename T>
struct EncoderStack {
    std::vector<EncoderLayer<T>> layers;

    static EncoderStack create(nn::ParamStore<T>& store, const std::string& name, const EncoderConfig& cfg,
                               CounterRng& rng);
    /// The last layer's edge update feeds nothing downstream and is skipped
    /// unless `final_edge_update` is set.
    StackOutput<T> forward(const LayerState<T>& input, const EdgeIndex& edges, const ForwardContext& ctx,
                           bool final_edge_update = false) const;
};

}  // namespace riga::model
