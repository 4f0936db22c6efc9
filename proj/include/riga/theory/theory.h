#pragma once

#include <cstdint>
#include <memory>
#include <tuple>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "riga/common/rng.h"
#include "riga/model/riga_model.h"

namespace riga::theory {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Undirected graph with a symmetric nonnegative weight matrix.
struct WeightedGraph {
    MatrixXd weights;

    static WeightedGraph from_edges(int n, const std::vector<std::tuple<int, int, double>>& edges);
    int n() const { return static_cast<int>(weights.rows()); }
    /// L = D - A.
    MatrixXd laplacian() const;
    bool connected() const;
};

/// Moore-Penrose pseudoinverse of a symmetric matrix; eigenvalues with
/// |λ| <= cutoff are treated as zero.
MatrixXd pseudoinverse(const MatrixXd& symmetric, double cutoff = 1e-10);

/// (e_u - e_v)ᵀ L⁺ (e_u - e_v). Throws InfiniteResistance when u and v are
/// disconnected (or the graph is), InvalidParameter when u == v.
double effective_resistance(const WeightedGraph& g, int u, int v);
double resistance_from_pinv(const MatrixXd& lap_pinv, int u, int v);

struct ResistancePair {
    int u = 0;
    int v = 0;
    double before = 0.0;
    double after = 0.0;
};

struct RankOneReport {
    std::vector<ResistancePair> pairs;
    int violations = 0;             // after > before + tolerance
    double max_increase = 0.0;      // max(after - before), may be negative
    double sherman_morrison_residual = 0.0;  // max |SM - direct pinv|
    double pinv_residual = 0.0;     // max |L L⁺ L - L|
};

/**
 * Compares resistances on L and L + ααᵀ, α projected off the all-ones
 * vector first. R' comes from direct pseudoinversion; the Sherman-Morrison
 * expansion is checked against it separately. Empty `pairs` means all.
 */
RankOneReport rank_one_resistance_check(const WeightedGraph& g, const VectorXd& alpha,
                                        std::vector<std::pair<int, int>> pairs = {}, double tolerance = 1e-9);

/// Geometric kNN graph on points in the unit square (weights in [0.5, 2]),
/// with components joined by their closest point pairs.
WeightedGraph random_connected_graph(int n, CounterRng& rng);

struct ResistanceSweep {
    int graphs = 0;
    int pairs = 0;
    int violations = 0;
    int triangle_violations = 0;
    double max_increase = -1e300;
    double max_sherman_morrison_residual = 0.0;
    double max_pinv_residual = 0.0;
    nlohmann::json to_json() const;
};

ResistanceSweep resistance_sweep(int count, int max_n, std::uint64_t seed);

/// Directed attention weights: weight[e] is a_{receiver[e], neighbor[e]}.
struct AttentionGraph {
    int n = 0;
    std::vector<int> receiver;
    std::vector<int> neighbor;
    std::vector<double> weight;
};

/// Head-averaged attention of one layer from the edge-major alpha (E x heads).
AttentionGraph attention_from_alpha(const ResidueGraph& graph, const RowMatrixXd& alpha);
AttentionGraph attention_from_alpha(int n, int k, const std::vector<int>& neighbors, const RowMatrixXd& alpha);

struct ReturnMassReport {
    std::vector<double> per_node;
    double mean = 0.0;
};

/// r_i = Σ_j a_ij a_ji over mutual pairs. Receiver rows must sum to 1 within
/// 1e-6, otherwise InvalidAttention.
ReturnMassReport return_mass(const AttentionGraph& att);

struct ContractionProfile {
    std::vector<double> directional;  // mean r̄ per layer over graphs
    std::vector<double> symmetric;
    double directional_max_ratio = 0.0;  // max r̄^{l+1} / r̄^l
    double symmetric_max_ratio = 0.0;
    nlohmann::json to_json() const;
};

double max_layer_ratio(const std::vector<double>& series);

/// Stage-1 evaluation forward on each graph. The symmetric series reuses the same
/// parameters with reverse channels sharing one averaged state.
ContractionProfile contraction_profile(const model::RigaModel<double>& model, const std::vector<ResidueGraph>& graphs,
                                       const model::EmbeddingProvider& structure_provider,
                                       const model::EmbeddingProvider& sequence_provider);

struct SensitivityFixture {
    std::vector<double> logits_i;  // receiver i over its neighbors
    int j_in_i = 0;                // position of j in i's list
    std::vector<double> logits_j;
    int i_in_j = 0;
    double ds_ij = 0.0;  // perturbation direction of s_ij
    double ds_ji = 0.0;
};

struct SensitivityResult {
    double measured = 0.0;  // |Δ(a_ij a_ji)|
    double bound = 0.0;     // first-order bound
    double slack = 0.0;     // second-order allowance
    bool violated = false;
};

struct SensitivityReport {
    std::vector<SensitivityResult> results;
    int violations = 0;
    double worst_margin = 0.0;  // max(measured - bound - slack)
    double fitted_c = 0.0;      // max(0, measured - bound) / ε²
    double analytic_c = 0.0;    // max slack / ε²
    nlohmann::json to_json() const;
};

/**
 * Perturbs s_ij and s_ji by ε·Δs and measures the change of a_ij a_ji
 * against a_ij φ_i |Δs_ji| + a_ji φ_j |Δs_ij| (φ the softmax slope). The
 * second-order allowance is the Taylor remainder bound
 * ε²(max|σ''|/2 · (a_ij Δs_ji² + a_ji Δs_ij²) + |Δs_ij Δs_ji| / 16).
 */
SensitivityReport softmax_sensitivity_check(const std::vector<SensitivityFixture>& fixtures, double eps);
std::vector<SensitivityFixture> random_sensitivity_fixtures(int count, CounterRng& rng);

struct RecyclingReport {
    std::vector<double> losses;  // L_t per stage
    bool final_not_worse = true;  // L_T <= L_1
    bool nonincreasing = true;
    nlohmann::json to_json() const;
};

RecyclingReport recycling_monotonicity_report(const std::vector<double>& stage_losses, double tolerance = 0.0);

struct OversmoothingProfile {
    std::vector<double> with_bridge;     // input to layer 1, then each layer output
    std::vector<double> without_bridge;
    nlohmann::json to_json() const;
};

/// mean_{i<j} |h_i - h_j| / mean_i |h_i|; 0 when every row is zero.
double normalized_pairwise_distance(const RowMatrixXd& h);

OversmoothingProfile oversmoothing_profile(const model::RigaModel<double>& model, const ResidueGraph& graph,
                                           const model::EmbeddingProvider& structure_provider,
                                           const model::EmbeddingProvider& sequence_provider);

/// Copy of `model` with different encoder switches and identical parameters.
std::unique_ptr<model::RigaModel<double>> with_encoder_flags(const model::RigaModel<double>& model, bool use_bridge,
                                                             bool directional_edges);

}  // namespace riga::theory
