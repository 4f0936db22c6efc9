#include "riga/theory/theory.h"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>

#include "riga/common/error.h"
#include "riga/nn/checkpoint.h"

namespace riga::theory {

WeightedGraph WeightedGraph::from_edges(int n, const std::vector<std::tuple<int, int, double>>& edges) {
    WeightedGraph g;
    g.weights = MatrixXd::Zero(n, n);
    for (const auto& [u, v, w] : edges) {
        if (u < 0 || v < 0 || u >= n || v >= n || u == v) throw InvalidParameter("edge endpoints out of range");
        if (w < 0.0) throw InvalidParameter("edge weights must be nonnegative");
        g.weights(u, v) += w;
        g.weights(v, u) += w;
    }
    return g;
}

MatrixXd WeightedGraph::laplacian() const {
    MatrixXd lap = -weights;
    lap.diagonal() = weights.rowwise().sum();
    return lap;
}

namespace {

std::vector<int> components(const MatrixXd& w) {
    const int n = static_cast<int>(w.rows());
    std::vector<int> comp(static_cast<std::size_t>(n), -1);
    int c = 0;
    for (int s = 0; s < n; ++s) {
        if (comp[static_cast<std::size_t>(s)] >= 0) continue;
        std::vector<int> stack{s};
        comp[static_cast<std::size_t>(s)] = c;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v)
                if (w(u, v) > 0.0 && comp[static_cast<std::size_t>(v)] < 0) {
                    comp[static_cast<std::size_t>(v)] = c;
                    stack.push_back(v);
                }
        }
        ++c;
    }
    return comp;
}

}  // namespace

bool WeightedGraph::connected() const {
    const auto comp = components(weights);
    return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

MatrixXd pseudoinverse(const MatrixXd& symmetric, double cutoff) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(symmetric);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition failed");
    VectorXd inv = eig.eigenvalues();
    for (Eigen::Index i = 0; i < inv.size(); ++i) inv(i) = std::abs(inv(i)) > cutoff ? 1.0 / inv(i) : 0.0;
    return eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
}

double resistance_from_pinv(const MatrixXd& p, int u, int v) { return p(u, u) + p(v, v) - 2.0 * p(u, v); }

double effective_resistance(const WeightedGraph& g, int u, int v) {
    if (u < 0 || v < 0 || u >= g.n() || v >= g.n()) throw InvalidParameter("node index out of range");
    if (u == v) throw InvalidParameter("effective resistance needs two distinct nodes");
    const auto comp = components(g.weights);
    if (comp[static_cast<std::size_t>(u)] != comp[static_cast<std::size_t>(v)])
        throw InfiniteResistance("nodes " + std::to_string(u) + " and " + std::to_string(v) + " are disconnected");
    if (!g.connected()) throw InfiniteResistance("graph is disconnected");
    return resistance_from_pinv(pseudoinverse(g.laplacian()), u, v);
}

RankOneReport rank_one_resistance_check(const WeightedGraph& g, const VectorXd& alpha_in,
                                        std::vector<std::pair<int, int>> pairs, double tolerance) {
    if (!g.connected()) throw InfiniteResistance("graph is disconnected");
    const int n = g.n();
    if (alpha_in.size() != n) throw ShapeError("alpha must have one entry per node");
    const VectorXd alpha = alpha_in.array() - alpha_in.mean();
    const MatrixXd lap = g.laplacian();
    const MatrixXd lp = pseudoinverse(lap);
    const MatrixXd lap2 = lap + alpha * alpha.transpose();
    const MatrixXd lp2 = pseudoinverse(lap2);
    const VectorXd la = lp * alpha;
    const MatrixXd sm = lp - la * la.transpose() / (1.0 + alpha.dot(la));

    RankOneReport r;
    r.sherman_morrison_residual = (sm - lp2).cwiseAbs().maxCoeff();
    r.pinv_residual = (lap * lp * lap - lap).cwiseAbs().maxCoeff();
    if (pairs.empty())
        for (int u = 0; u < n; ++u)
            for (int v = u + 1; v < n; ++v) pairs.emplace_back(u, v);
    r.max_increase = -1e300;
    for (const auto& [u, v] : pairs) {
        ResistancePair p{u, v, resistance_from_pinv(lp, u, v), resistance_from_pinv(lp2, u, v)};
        r.max_increase = std::max(r.max_increase, p.after - p.before);
        if (p.after > p.before + tolerance) ++r.violations;
        r.pairs.push_back(p);
    }
    return r;
}

WeightedGraph random_connected_graph(int n, CounterRng& rng) {
    if (n < 2) throw InvalidParameter("random graph needs at least two nodes");
    std::vector<Eigen::Vector2d> pts(static_cast<std::size_t>(n));
    for (auto& p : pts) p = {rng.uniform(), rng.uniform()};
    auto dist = [&](int a, int b) { return (pts[static_cast<std::size_t>(a)] - pts[static_cast<std::size_t>(b)]).norm(); };
    WeightedGraph g;
    g.weights = MatrixXd::Zero(n, n);
    const int k = std::min(n - 1, 1 + static_cast<int>(rng.below(3)));
    for (int i = 0; i < n; ++i) {
        std::vector<int> others;
        for (int j = 0; j < n; ++j)
            if (j != i) others.push_back(j);
        std::partial_sort(others.begin(), others.begin() + k, others.end(),
                          [&](int a, int b) { return dist(i, a) < dist(i, b) || (dist(i, a) == dist(i, b) && a < b); });
        for (int q = 0; q < k; ++q) {
            const int j = others[static_cast<std::size_t>(q)];
            if (g.weights(i, j) == 0.0) g.weights(i, j) = g.weights(j, i) = rng.uniform(0.5, 2.0);
        }
    }
    // Join components through their closest cross pair until connected.
    for (;;) {
        const auto comp = components(g.weights);
        if (std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; })) break;
        int bu = -1, bv = -1;
        double best = 1e300;
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v)
                if (comp[static_cast<std::size_t>(u)] == 0 && comp[static_cast<std::size_t>(v)] != 0 && dist(u, v) < best) {
                    best = dist(u, v);
                    bu = u;
                    bv = v;
                }
        g.weights(bu, bv) = g.weights(bv, bu) = rng.uniform(0.5, 2.0);
    }
    return g;
}

nlohmann::json ResistanceSweep::to_json() const {
    return {{"graphs", graphs},
            {"pairs", pairs},
            {"violations", violations},
            {"triangle_violations", triangle_violations},
            {"max_increase", max_increase},
            {"max_sherman_morrison_residual", max_sherman_morrison_residual},
            {"max_pinv_residual", max_pinv_residual}};
}

ResistanceSweep resistance_sweep(int count, int max_n, std::uint64_t seed) {
    if (max_n < 2) throw InvalidParameter("max_n must be >= 2");
    ResistanceSweep s;
    CounterRng rng(seed);
    for (int gi = 0; gi < count; ++gi) {
        const int n = 2 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_n - 1)));
        const WeightedGraph g = random_connected_graph(n, rng);
        VectorXd alpha(n);
        for (int i = 0; i < n; ++i) alpha(i) = rng.normal();
        const RankOneReport r = rank_one_resistance_check(g, alpha);
        ++s.graphs;
        s.pairs += static_cast<int>(r.pairs.size());
        s.violations += r.violations;
        s.max_increase = std::max(s.max_increase, r.max_increase);
        s.max_sherman_morrison_residual = std::max(s.max_sherman_morrison_residual, r.sherman_morrison_residual);
        s.max_pinv_residual = std::max(s.max_pinv_residual, r.pinv_residual);

        const MatrixXd lp = pseudoinverse(g.laplacian());
        for (int u = 0; u < n; ++u)
            for (int v = 0; v < n; ++v)
                for (int w = 0; w < n; ++w) {
                    if (u == v || v == w || u == w) continue;
                    if (resistance_from_pinv(lp, u, w) >
                        resistance_from_pinv(lp, u, v) + resistance_from_pinv(lp, v, w) + 1e-9)
                        ++s.triangle_violations;
                }
    }
    return s;
}

AttentionGraph attention_from_alpha(int n, int k, const std::vector<int>& neighbors, const RowMatrixXd& alpha) {
    if (alpha.rows() != static_cast<Eigen::Index>(n) * k || neighbors.size() != static_cast<std::size_t>(n) * k)
        throw ShapeError("attention weights must have one row per edge");
    AttentionGraph a;
    a.n = n;
    for (int e = 0; e < n * k; ++e) {
        a.receiver.push_back(e / k);
        a.neighbor.push_back(neighbors[static_cast<std::size_t>(e)]);
        a.weight.push_back(alpha.row(e).mean());
    }
    return a;
}

AttentionGraph attention_from_alpha(const ResidueGraph& graph, const RowMatrixXd& alpha) {
    return attention_from_alpha(graph.n, graph.k, graph.neighbors, alpha);
}

ReturnMassReport return_mass(const AttentionGraph& att) {
    const std::size_t m = att.receiver.size();
    if (att.neighbor.size() != m || att.weight.size() != m) throw ShapeError("attention arrays differ in length");
    std::vector<double> row_sum(static_cast<std::size_t>(att.n), 0.0);
    std::vector<std::vector<std::pair<int, double>>> out(static_cast<std::size_t>(att.n));
    for (std::size_t e = 0; e < m; ++e) {
        const int i = att.receiver[e], j = att.neighbor[e];
        if (i < 0 || j < 0 || i >= att.n || j >= att.n) throw InvalidAttention("attention edge endpoint out of range");
        if (!(att.weight[e] >= 0.0)) throw InvalidAttention("attention weights must be nonnegative");
        row_sum[static_cast<std::size_t>(i)] += att.weight[e];
        out[static_cast<std::size_t>(i)].emplace_back(j, att.weight[e]);
    }
    for (int i = 0; i < att.n; ++i)
        if (std::abs(row_sum[static_cast<std::size_t>(i)] - 1.0) > 1e-6)
            throw InvalidAttention("attention row of node " + std::to_string(i) + " sums to " +
                                   std::to_string(row_sum[static_cast<std::size_t>(i)]));
    auto weight_of = [&](int i, int j) {
        double w = 0.0;
        for (const auto& [nb, a] : out[static_cast<std::size_t>(i)])
            if (nb == j) w += a;
        return w;
    };
    ReturnMassReport r;
    r.per_node.assign(static_cast<std::size_t>(att.n), 0.0);
    for (int i = 0; i < att.n; ++i)
        for (const auto& [j, a] : out[static_cast<std::size_t>(i)]) r.per_node[static_cast<std::size_t>(i)] += a * weight_of(j, i);
    // Neumaier summation keeps small closed-form fixtures exact.
    double sum = 0.0, comp = 0.0;
    for (double v : r.per_node) {
        const double t = sum + v;
        comp += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    r.mean = att.n > 0 ? (sum + comp) / att.n : 0.0;
    return r;
}

double max_layer_ratio(const std::vector<double>& s) {
    double best = 0.0;
    for (std::size_t l = 1; l < s.size(); ++l)
        if (s[l - 1] > 0.0) best = std::max(best, s[l] / s[l - 1]);
    return best;
}

std::unique_ptr<model::RigaModel<double>> with_encoder_flags(const model::RigaModel<double>& m, bool use_bridge,
                                                             bool directional_edges) {
    model::ModelConfig cfg = m.config();
    cfg.encoder.use_bridge = use_bridge;
    cfg.encoder.directional_edges = directional_edges;
    auto copy = std::make_unique<model::RigaModel<double>>(cfg, 0);
    nn::load_params(copy->params(), nn::params_to_blob(m.params(), CounterRng(), {}, true));
    return copy;
}

namespace {

std::vector<double> layer_return_mass(const model::RigaModel<double>& m, const std::vector<ResidueGraph>& graphs,
                                      const model::EmbeddingProvider& sp, const model::EmbeddingProvider& qp) {
    std::vector<double> series;
    for (const auto& g : graphs) {
        const auto res = model::recycle_infer(m, g, sp, qp, 1);
        const auto& alphas = res.alphas.front();
        if (series.empty()) series.assign(alphas.size(), 0.0);
        for (std::size_t l = 0; l < alphas.size(); ++l)
            series[l] += return_mass(attention_from_alpha(g, alphas[l])).mean / static_cast<double>(graphs.size());
    }
    return series;
}

}  // namespace

nlohmann::json ContractionProfile::to_json() const {
    return {{"directional", directional},
            {"symmetric", symmetric},
            {"directional_max_ratio", directional_max_ratio},
            {"symmetric_max_ratio", symmetric_max_ratio}};
}

ContractionProfile contraction_profile(const model::RigaModel<double>& m, const std::vector<ResidueGraph>& graphs,
                                       const model::EmbeddingProvider& sp, const model::EmbeddingProvider& qp) {
    ContractionProfile p;
    const auto directional = with_encoder_flags(m, m.config().encoder.use_bridge, true);
    const auto symmetric = with_encoder_flags(m, m.config().encoder.use_bridge, false);
    p.directional = layer_return_mass(*directional, graphs, sp, qp);
    p.symmetric = layer_return_mass(*symmetric, graphs, sp, qp);
    p.directional_max_ratio = max_layer_ratio(p.directional);
    p.symmetric_max_ratio = max_layer_ratio(p.symmetric);
    return p;
}

namespace {

std::vector<double> softmax_of(const std::vector<double>& x) {
    return nn::softmax<double>(std::span<const double>(x.data(), x.size()));
}

constexpr double kMaxLogisticCurvature = 0.0962250448649376;  // sqrt(3) / 18

}  // namespace

SensitivityReport softmax_sensitivity_check(const std::vector<SensitivityFixture>& fixtures, double eps) {
    SensitivityReport rep;
    rep.worst_margin = -1e300;
    for (const auto& f : fixtures) {
        if (f.j_in_i < 0 || f.j_in_i >= static_cast<int>(f.logits_i.size()) || f.i_in_j < 0 ||
            f.i_in_j >= static_cast<int>(f.logits_j.size()))
            throw InvalidParameter("sensitivity fixture index out of range");
        const auto pi = softmax_of(f.logits_i);
        const auto pj = softmax_of(f.logits_j);
        const double a_ij = pi[static_cast<std::size_t>(f.j_in_i)];
        const double a_ji = pj[static_cast<std::size_t>(f.i_in_j)];

        auto li = f.logits_i;
        auto lj = f.logits_j;
        li[static_cast<std::size_t>(f.j_in_i)] += eps * f.ds_ij;
        lj[static_cast<std::size_t>(f.i_in_j)] += eps * f.ds_ji;
        const double b_ij = softmax_of(li)[static_cast<std::size_t>(f.j_in_i)];
        const double b_ji = softmax_of(lj)[static_cast<std::size_t>(f.i_in_j)];

        const double phi_i = a_ji * (1.0 - a_ji);
        const double phi_j = a_ij * (1.0 - a_ij);
        SensitivityResult r;
        r.measured = std::abs(b_ij * b_ji - a_ij * a_ji);
        r.bound = a_ij * phi_i * std::abs(eps * f.ds_ji) + a_ji * phi_j * std::abs(eps * f.ds_ij);
        r.slack = eps * eps *
                  (0.5 * kMaxLogisticCurvature * (a_ij * f.ds_ji * f.ds_ji + a_ji * f.ds_ij * f.ds_ij) +
                   std::abs(f.ds_ij * f.ds_ji) / 16.0);
        // Rounding of the two products themselves.
        const double rounding = 8.0 * std::numeric_limits<double>::epsilon();
        r.violated = r.measured > r.bound + r.slack + rounding;
        rep.violations += r.violated ? 1 : 0;
        rep.worst_margin = std::max(rep.worst_margin, r.measured - r.bound - r.slack);
        if (eps > 0.0) {
            rep.fitted_c = std::max(rep.fitted_c, std::max(0.0, r.measured - r.bound) / (eps * eps));
            rep.analytic_c = std::max(rep.analytic_c, r.slack / (eps * eps));
        }
        rep.results.push_back(r);
    }
    if (fixtures.empty()) rep.worst_margin = 0.0;
    return rep;
}

std::vector<SensitivityFixture> random_sensitivity_fixtures(int count, CounterRng& rng) {
    std::vector<SensitivityFixture> out;
    for (int c = 0; c < count; ++c) {
        SensitivityFixture f;
        const int di = 1 + static_cast<int>(rng.below(6));
        const int dj = 1 + static_cast<int>(rng.below(6));
        const double spread = rng.uniform(0.1, 6.0);
        for (int q = 0; q < di; ++q) f.logits_i.push_back(spread * rng.normal());
        for (int q = 0; q < dj; ++q) f.logits_j.push_back(spread * rng.normal());
        f.j_in_i = static_cast<int>(rng.below(static_cast<std::uint64_t>(di)));
        f.i_in_j = static_cast<int>(rng.below(static_cast<std::uint64_t>(dj)));
        f.ds_ij = rng.normal();
        f.ds_ji = rng.normal();
        out.push_back(std::move(f));
    }
    return out;
}

nlohmann::json SensitivityReport::to_json() const {
    return {{"fixtures", results.size()},
            {"violations", violations},
            {"worst_margin", worst_margin},
            {"fitted_c", fitted_c},
            {"analytic_c", analytic_c}};
}

RecyclingReport recycling_monotonicity_report(const std::vector<double>& losses, double tolerance) {
    if (losses.empty()) throw InvalidParameter("recycling report needs at least one stage");
    RecyclingReport r;
    r.losses = losses;
    r.final_not_worse = losses.back() <= losses.front() + tolerance;
    for (std::size_t t = 1; t < losses.size(); ++t)
        if (losses[t] > losses[t - 1] + tolerance) r.nonincreasing = false;
    return r;
}

nlohmann::json RecyclingReport::to_json() const {
    return {{"losses", losses}, {"final_not_worse", final_not_worse}, {"nonincreasing", nonincreasing}};
}

double normalized_pairwise_distance(const RowMatrixXd& h) {
    const Eigen::Index n = h.rows();
    if (n < 2) return 0.0;
    double norm_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) norm_sum += h.row(i).norm();
    if (norm_sum == 0.0) return 0.0;
    double dist_sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) dist_sum += (h.row(i) - h.row(j)).norm();
    const double pairs = 0.5 * static_cast<double>(n) * static_cast<double>(n - 1);
    return (dist_sum / pairs) / (norm_sum / static_cast<double>(n));
}

nlohmann::json OversmoothingProfile::to_json() const {
    return {{"with_bridge", with_bridge}, {"without_bridge", without_bridge}};
}

OversmoothingProfile oversmoothing_profile(const model::RigaModel<double>& m, const ResidueGraph& graph,
                                           const model::EmbeddingProvider& sp, const model::EmbeddingProvider& qp) {
    OversmoothingProfile p;
    const bool directional = m.config().encoder.directional_edges;
    for (bool bridge : {true, false}) {
        const auto variant = with_encoder_flags(m, bridge, directional);
        const auto res = model::recycle_infer(*variant, graph, sp, qp, 1);
        auto& series = bridge ? p.with_bridge : p.without_bridge;
        for (const auto& h : res.node_states.front()) series.push_back(normalized_pairwise_distance(h));
    }
    return p;
}

}  // namespace riga::theory
