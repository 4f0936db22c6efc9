#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "riga/cli/app.h"
#include "riga/cli/config.h"
#include "riga/common/blob.h"
#include "riga/common/error.h"
#include "riga/geometry/features.h"
#include "riga/geometry/graph_container.h"
#include "riga/model/gau.h"
#include "riga/model/riga_model.h"
#include "riga/nn/gradcheck.h"
#include "riga/structure/container.h"
#include "riga/structure/pdb.h"
#include "riga/structure/synthetic.h"
#include "riga/structure/transform.h"
#include "riga/theory/theory.h"
#include "riga/train/training.h"
#include "support/fixtures.h"
#include "support/graphs.h"
#include "support/oracles.h"

namespace fs = std::filesystem;
using namespace riga;

namespace {

// Tolerances and budgets.
constexpr double kInvariance32 = 1e-5;
constexpr double kInvariance64 = 1e-8;
constexpr double kInvarianceBudgetSec = 120.0;
constexpr double kOracleTol = 1e-7;
constexpr double kGradTol = 1e-4;
constexpr double kGradBudgetSec = 300.0;
constexpr double kResistanceBudgetSec = 60.0;
constexpr double kShermanMorrisonTol = 1e-8;
constexpr double kSensitivityEps = 1e-4;
constexpr double kToyRecovery = 90.0;
constexpr double kToyPpl = 1.5;
constexpr double kToyBudgetSec = 1200.0;
constexpr double kLossTol = 1e-9;

// Sizes.
constexpr int kInvarianceBackbones = 100;
constexpr int kInvarianceTransforms = 10;
constexpr int kInvarianceMinLen = 12;
constexpr int kInvarianceMaxLen = 20;
constexpr int kGradResidues = 30;
constexpr std::size_t kGradCoordsPerParam = 5;
constexpr int kToySeed = 7;
constexpr int kToyProteins = 5;
constexpr int kDeterminismSteps = 30;

using Td = nn::Tensor<double>;
using Md = nn::Matrix<double>;

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Context {
    fs::path work;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

int run_cli(const std::vector<std::string>& args, const fs::path& log) {
    std::vector<const char*> argv{"riga"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    std::ofstream(log) << out.str() << err.str();
    return code;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

Md random_matrix(Eigen::Index r, Eigen::Index c, CounterRng& rng, double scale = 1.0) {
    Md m(r, c);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.uniform(-1.0, 1.0);
    return m;
}

void randomize_biases(nn::ParamStore<double>& store, CounterRng& rng) {
    for (auto& [name, t] : store.entries()) {
        Td handle = t;
        if (name.ends_with(".bias")) handle.mutable_value() = random_matrix(t.rows(), t.cols(), rng, 0.3);
    }
}

template <typename A, typename B>
double max_abs_diff(const A& a, const B& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) return INFINITY;
    if (a.size() == 0) return 0.0;
    return (a.template cast<double>() - b.template cast<double>()).cwiseAbs().maxCoeff();
}

// ------------------------------------------------------------------ 1

Outcome se3_invariance(const Context&) {
    const auto t0 = std::chrono::steady_clock::now();
    const FeatureConfig features;
    model::ModelConfig mc;
    const model::RigaModel<double> m64(mc, 11);
    const model::RigaModel<float> m32(mc, 11);
    const model::StubProvider structure(model::PriorKind::Structure, mc.struct_dim);
    const model::StubProvider sequence(model::PriorKind::Sequence, mc.seq_dim);

    const auto corpus = synthetic_corpus(kInvarianceBackbones, kInvarianceMinLen, kInvarianceMaxLen, 0x5e3);
    CounterRng rng(0x5e3);
    double feat = 0.0, logit32 = 0.0, logit64 = 0.0;
    for (const auto& b : corpus) {
        const ResidueGraph g = build_knn_graph(b, features);
        const auto r64 = model::recycle_infer(m64, g, structure, sequence, 3, &b);
        const auto r32 = model::recycle_infer(m32, g, structure, sequence, 3, &b);
        for (int t = 0; t < kInvarianceTransforms; ++t) {
            const Vec3 shift(rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50));
            const ProteinBackbone moved = apply_rigid_transform(b, random_rotation(rng), shift);
            const ResidueGraph gm = build_knn_graph(moved, features);
            if (gm.neighbors != g.neighbors) return {false, "neighbor lists changed under a rigid transform"};
            feat = std::max({feat, max_abs_diff(g.node_feats, gm.node_feats), max_abs_diff(g.edge_feats, gm.edge_feats)});
            const auto s64 = model::recycle_infer(m64, gm, structure, sequence, 3, &moved);
            const auto s32 = model::recycle_infer(m32, gm, structure, sequence, 3, &moved);
            logit64 = std::max(logit64, max_abs_diff(r64.stages.back().probs.array().log().matrix(),
                                                     s64.stages.back().probs.array().log().matrix()));
            logit32 = std::max(logit32, max_abs_diff(r32.stages.back().probs.array().log().matrix(),
                                                     s32.stages.back().probs.array().log().matrix()));
        }
    }
    const double secs = seconds_since(t0);
    const bool pass = feat <= kInvariance64 && logit64 <= kInvariance64 && logit32 <= kInvariance32 &&
                      secs < kInvarianceBudgetSec;
    return {pass, "features " + fmt("%.2e", feat) + ", log-probs 64-bit " + fmt("%.2e", logit64) + ", 32-bit " +
                      fmt("%.2e", logit32) + ", " + fmt("%.1f", secs) + " s"};
}

// ------------------------------------------------------------------ 2

Outcome formula_oracles(const Context&) {
    double worst = 0.0;
    CounterRng rng(0x0a);
    for (int trial = 0; trial < 4; ++trial) {
        const int n = 6 + trial, k = 3, d = 8, heads = trial % 2 ? 4 : 1;
        std::vector<int> nb;
        for (int i = 0; i < n; ++i)
            for (int s = 1; s <= k; ++s) nb.push_back((i + s) % n);
        const model::EdgeIndex edges = testing::edge_index(n, k, nb);
        nn::ParamStore<double> store;
        auto gau = model::GauParams<double>::create(store, "g", d, d, heads, 0.0, rng);
        auto mlp = nn::Mlp<double>::create(store, "m", {3 * d, d, d}, nn::Activation::Gelu, 0.0, rng);
        auto bridge = model::BridgeParams<double>::create(store, "b", d, nn::Activation::Gelu, 0.0, false, rng);
        randomize_biases(store, rng);
        const model::LayerState<double> s{Td(random_matrix(n, d, rng)), Td(random_matrix(n * k, d, rng))};

        const auto att = model::gau_attention(s, edges, gau, nn::ForwardContext{});
        const auto aref = testing::attention_ref(s.h.value(), s.e.value(), nb, k, gau.w_q.value(), gau.w_k.value(),
                                                 gau.w_v.value(), heads);
        worst = std::max(worst, max_abs_diff(att.h_local.value(), aref.h_local));
        for (int i = 0; i < n; ++i)
            worst = std::max(worst, max_abs_diff(Md(att.alpha.value().block(i * k, 0, k, heads)),
                                                 aref.alpha[static_cast<std::size_t>(i)]));

        const Md e_new = model::edge_update(s, edges, mlp, nn::ForwardContext{}).value();
        worst = std::max(worst, max_abs_diff(e_new, testing::edge_update_ref(s.h.value(), s.e.value(), nb, k,
                                                                             testing::to_ref(mlp))));

        const auto br = model::global_context_bridge(s.h, bridge, nn::ForwardContext{});
        const auto bref = testing::bridge_ref(s.h.value(), bridge.w_att.value(), bridge.w_val.value(),
                                              testing::to_ref(bridge.mlp_up), testing::to_ref(bridge.mlp_in),
                                              testing::to_ref(bridge.mlp_out));
        worst = std::max({worst, max_abs_diff(br.h_out.value(), bref.h_out),
                          max_abs_diff(Md(br.g_pool.value().transpose()), bref.g_pool)});

        std::vector<AminoAcid> truth;
        std::vector<int> truth_i, mask_i;
        for (int i = 0; i < n; ++i) {
            const AminoAcid aa = i == 2 ? kUnk : static_cast<AminoAcid>(rng.below(20));
            truth.push_back(aa);
            truth_i.push_back(aa == kUnk ? 0 : aa);
            mask_i.push_back(aa == kUnk ? 0 : 1);
        }
        std::vector<Td> logits;
        std::vector<model::SequenceDistribution> dists;
        std::vector<testing::Mat> probs;
        for (int t = 0; t < 3; ++t) {
            logits.emplace_back(random_matrix(n, 20, rng, 4.0));
            dists.push_back(model::decode_logits(logits.back().value(), t + 1));
            probs.push_back(dists.back().probs);
        }
        const auto mask = train::loss_mask(truth);
        const double ref = testing::staged_loss_ref(probs, truth_i, mask_i);
        worst = std::max({worst, std::abs(train::staged_loss(dists, truth, mask) - ref),
                          std::abs(train::staged_loss(logits, truth, mask).item() - ref)});
    }
    return {worst <= kOracleTol, "max deviation " + fmt("%.2e", worst)};
}

// ------------------------------------------------------------------ 3

Outcome gradient_fidelity(const Context&) {
    const auto t0 = std::chrono::steady_clock::now();
    model::ModelConfig mc;
    mc.encoder.dropout = 0.0;
    model::RigaModel<double> m(mc, 21);
    CounterRng rng(0x67);
    randomize_biases(m.params(), rng);
    const ProteinBackbone b = synthetic_backbone(kGradResidues, rng);
    const ResidueGraph g = build_knn_graph(b, FeatureConfig{});
    const model::StubProvider structure(model::PriorKind::Structure, mc.struct_dim);
    const model::StubProvider sequence(model::PriorKind::Sequence, mc.seq_dim);
    const auto prior = structure.embed_structure(g.n, &b);
    const auto truth = b.sequence();
    const auto mask = train::loss_mask(truth);
    auto loss = [&] {
        const auto trace = model::recycle_forward(m, g, prior, sequence, 3, nn::ForwardContext{});
        return train::staged_loss(trace.logits, truth, mask);
    };
    nn::GradCheckOptions opt;
    opt.max_coords_per_param = kGradCoordsPerParam;
    opt.seed = 3;
    opt.refine_above = kGradTol;
    const auto params = m.params().tensors();
    const auto rep = nn::check_gradient<double>(loss, params, opt);
    const double secs = seconds_since(t0);
    return {rep.max_rel_error <= kGradTol && secs < kGradBudgetSec,
            "max relative error " + fmt("%.2e", rep.max_rel_error) + " over " + std::to_string(rep.coords_checked) +
                " coordinates in " + std::to_string(params.size()) + " tensors; central-difference max " +
                fmt("%.2e", rep.max_central_error) + ", " + std::to_string(rep.coords_refined) +
                " coordinates refined by extrapolation (worst " +
                m.params().entries()[rep.worst_param].first + "[" + std::to_string(rep.worst_coord) +
                "]: analytic " + fmt("%.6e", rep.worst_analytic) + ", numeric " + fmt("%.6e", rep.worst_numeric) +
                "), " + fmt("%.1f", secs) + " s"};
}

// ------------------------------------------------------------------ 4

Outcome resistance_monotonicity(const Context&) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto s = theory::resistance_sweep(200, 12, 0x4e5);
    const double secs = seconds_since(t0);
    const bool pass = s.graphs == 200 && s.violations == 0 && s.max_sherman_morrison_residual <= kShermanMorrisonTol &&
                      secs < kResistanceBudgetSec;
    return {pass, std::to_string(s.graphs) + " graphs, " + std::to_string(s.pairs) + " pairs, " +
                      std::to_string(s.violations) + " violations, Sherman-Morrison residual " +
                      fmt("%.2e", s.max_sherman_morrison_residual) + ", " + fmt("%.2f", secs) + " s"};
}

// ------------------------------------------------------------------ 5

Outcome softmax_sensitivity(const Context&) {
    CounterRng rng(0x5e5);
    const auto fixtures = theory::random_sensitivity_fixtures(1000, rng);
    const auto rep = theory::softmax_sensitivity_check(fixtures, kSensitivityEps);
    const bool pass = fixtures.size() == 1000 && rep.violations == 0;
    return {pass, std::to_string(rep.violations) + " violations, worst margin " + fmt("%.2e", rep.worst_margin) +
                      ", fitted c " + fmt("%.3g", rep.fitted_c) + " vs analytic c " + fmt("%.3g", rep.analytic_c)};
}

// ------------------------------------------------------------------ 6

Outcome directional_independence(const Context&) {
    int fixtures = 0, probes = 0, leaks = 0, symmetric_coupled = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        CounterRng rng(seed);
        FeatureConfig f;
        f.k = 6 + static_cast<int>(seed);
        const ResidueGraph g = build_knn_graph(synthetic_backbone(18 + static_cast<int>(seed) * 3, rng), f);
        const model::EdgeIndex edges = model::EdgeIndex::from_graph(g);
        const auto reverse = g.reverse_edges();
        model::EncoderConfig cfg;
        cfg.hidden_dim = 16;
        cfg.heads = 2;
        cfg.dropout = 0.0;
        for (bool directional : {true, false}) {
            cfg.directional_edges = directional;
            nn::ParamStore<double> store;
            const auto layer = model::EncoderLayer<double>::create(store, "l", cfg, rng);
            randomize_biases(store, rng);
            const Md h = random_matrix(g.n, 16, rng);
            const Md e = random_matrix(g.n * g.k, 16, rng);
            const Md base = layer.forward({Td(h), Td(e)}, edges, nn::ForwardContext{}, true).state.e.value();
            for (int edge = 0; edge < g.n * g.k; ++edge) {
                const int rev = reverse[static_cast<std::size_t>(edge)];
                if (rev < 0) continue;
                Md bumped = e;
                bumped.row(rev).array() += 0.5;
                const Md out = layer.forward({Td(h), Td(bumped)}, edges, nn::ForwardContext{}, true).state.e.value();
                const bool same = std::memcmp(out.row(edge).eval().data(), base.row(edge).eval().data(),
                                              sizeof(double) * 16) == 0;
                if (directional) {
                    ++probes;
                    leaks += same ? 0 : 1;
                } else {
                    symmetric_coupled += same ? 0 : 1;
                }
            }
        }
        ++fixtures;
    }
    const bool pass = probes > 0 && leaks == 0;
    return {pass, std::to_string(probes) + " reverse-edge probes on " + std::to_string(fixtures) + " fixtures, " +
                      std::to_string(leaks) + " nonzero; symmetric ablation coupled on " +
                      std::to_string(symmetric_coupled) + " probes"};
}

// ------------------------------------------------------------------ 7

Outcome return_mass(const Context& ctx) {
    theory::AttentionGraph star;
    star.n = 4;
    for (int leaf = 1; leaf <= 3; ++leaf) {
        star.receiver.push_back(0), star.neighbor.push_back(leaf), star.weight.push_back(1.0 / 3.0);
        star.receiver.push_back(leaf), star.neighbor.push_back(0), star.weight.push_back(1.0);
    }
    theory::AttentionGraph pair;
    pair.n = 2;
    pair.receiver = {0, 1};
    pair.neighbor = {1, 0};
    pair.weight = {1.0, 1.0};
    const double r_star = theory::return_mass(star).mean;
    const double r_pair = theory::return_mass(pair).mean;

    const fs::path prefix = ctx.work / "return_mass_model";
    const int code = run_cli({"theory", "--suite", "return-mass", "--graph", "model", "--seed", "7", "--out",
                              prefix.string()},
                             ctx.work / "return_mass_model.log");
    std::size_t dir_layers = 0, sym_layers = 0;
    if (code == 0) {
        const auto j = nlohmann::json::parse(read_file(prefix.string() + ".json"));
        dir_layers = j["result"]["directional"].size();
        sym_layers = j["result"]["symmetric"].size();
    }
    const bool pass = r_star == 0.5 && r_pair == 1.0 && code == 0 && dir_layers == 5 && sym_layers == 5;
    return {pass, "star3 " + fmt("%.17g", r_star) + ", pair " + fmt("%.17g", r_pair) + ", model series " +
                      std::to_string(dir_layers) + "/" + std::to_string(sym_layers) + " layers in " +
                      prefix.filename().string() + ".csv"};
}

// ------------------------------------------------------------------ 8

fs::path toy_dir(const Context& ctx) { return ctx.work / "toy"; }

std::vector<std::string> toy_args(const fs::path& out, int steps = 0) {
    std::vector<std::string> a{"train", "--config", std::string(RIGA_SOURCE_DIR) + "/configs/toy.json", "--synthetic",
                               std::to_string(kToyProteins), "--seed", std::to_string(kToySeed), "--out", out.string()};
    if (steps > 0) a.insert(a.end(), {"--steps", std::to_string(steps)});
    return a;
}

Outcome toy_memorization(const Context& ctx) {
    const auto t0 = std::chrono::steady_clock::now();
    const int code = run_cli(toy_args(toy_dir(ctx)), ctx.work / "toy.log");
    const double secs = seconds_since(t0);
    if (code != 0) return {false, "training exited with code " + std::to_string(code)};
    const auto summary = nlohmann::json::parse(read_file(toy_dir(ctx) / "summary.json"));
    const double recovery = summary["train_final"]["recovery"];
    const double ppl = summary["train_final"]["ppl"];
    const int steps = summary["steps"];

    const int a = run_cli(toy_args(ctx.work / "det_a", kDeterminismSteps), ctx.work / "det_a.log");
    const int b = run_cli(toy_args(ctx.work / "det_b", kDeterminismSteps), ctx.work / "det_b.log");
    const bool same = a == 0 && b == 0 &&
                      read_file(ctx.work / "det_a" / "metrics.csv") == read_file(ctx.work / "det_b" / "metrics.csv") &&
                      read_file(ctx.work / "det_a" / "checkpoint.ckpt") ==
                          read_file(ctx.work / "det_b" / "checkpoint.ckpt");
    const bool pass = steps == 2000 && recovery >= kToyRecovery && ppl < kToyPpl && secs < kToyBudgetSec && same;
    return {pass, std::to_string(steps) + " steps, recovery " + fmt("%.2f", recovery) + "%, final-stage PPL " +
                      fmt("%.6f", ppl) + ", " + fmt("%.0f", secs) + " s, repeat " +
                      (same ? "bit-identical" : "differs")};
}

// ------------------------------------------------------------------ 9

Outcome recycling_monotonicity(const Context& ctx) {
    const fs::path ckpt = toy_dir(ctx) / "checkpoint.ckpt";
    if (!fs::exists(ckpt) && run_cli(toy_args(toy_dir(ctx)), ctx.work / "toy.log") != 0)
        return {false, "no toy checkpoint"};
    const Blob blob = load_blob(ckpt.string(), "CKPT");
    const cli::RunConfig run = cli::RunConfig::from_json(blob.header["run_config"]);
    const FeatureConfig features = feature_config_from_json(blob.header["feature_config"]);
    const auto m = model::model_from_blob<double>(blob);
    const auto structure = model::make_provider(run.providers.structure, model::PriorKind::Structure,
                                                m->config().struct_dim, run.providers.stub_seed);
    const auto sequence = model::make_provider(run.providers.sequence, model::PriorKind::Sequence,
                                               m->config().seq_dim, run.providers.stub_seed);
    const auto corpus = synthetic_corpus(kToyProteins, 30, 60, CounterRng(kToySeed).fork(0x53594e).next_u64());

    bool causal = true;
    std::vector<double> oracle(3, 0.0);
    int residues = 0;
    for (const auto& b : corpus) {
        const ResidueGraph g = build_knn_graph(b, features);
        const auto one = model::recycle_infer(*m, g, *structure, *sequence, 1, &b);
        const auto three = model::recycle_infer(*m, g, *structure, *sequence, 3, &b);
        causal = causal && one.stages[0].probs == three.stages[0].probs;
        const auto truth = b.sequence();
        const auto mask = train::loss_mask(truth);
        const model::OracleSequenceProvider oracle_prov(sequence, truth);
        const auto r = model::recycle_infer(*m, g, *structure, oracle_prov, 3, &b);
        const int n = static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
        for (int t = 0; t < 3; ++t)
            oracle[static_cast<std::size_t>(t)] += train::staged_loss({r.stages[static_cast<std::size_t>(t)]}, truth, mask) * n;
        residues += n;
    }
    for (auto& v : oracle) v /= residues;
    const auto rep = theory::recycling_monotonicity_report(oracle);
    return {causal && rep.final_not_worse,
            std::string("stage 1 ") + (causal ? "identical" : "differs") + " for T=1 vs T=3; oracle L_1 " +
                fmt("%.3e", oracle[0]) + ", L_2 " + fmt("%.3e", oracle[1]) + ", L_3 " + fmt("%.3e", oracle[2])};
}

// ------------------------------------------------------------------ 10

Outcome loss_arithmetic(const Context&) {
    const int n = 12;
    std::vector<AminoAcid> truth;
    for (int i = 0; i < n; ++i) truth.push_back(static_cast<AminoAcid>(i % 20));
    const auto mask = train::loss_mask(truth);
    std::vector<model::SequenceDistribution> uniform, perfect;
    for (int t = 1; t <= 3; ++t) {
        uniform.push_back(model::decode_logits(RowMatrixXd::Zero(n, 20), t));
        RowMatrixXd p = RowMatrixXd::Zero(n, 20);
        for (int i = 0; i < n; ++i) p(i, truth[static_cast<std::size_t>(i)]) = 1.0;
        perfect.push_back({p, t});
    }
    const double lu = train::staged_loss(uniform, truth, mask);
    const double lp = train::staged_loss(perfect, truth, mask);
    const std::vector<Td> zero_logits(3, Td(Md::Zero(n, 20)));
    const double lu_t = train::staged_loss(zero_logits, truth, mask).item();

    CounterRng rng(0x10);
    const RowMatrixXd logits = random_matrix(n, 20, rng, 3.0);
    const auto m = train::compute_metrics(model::decode_logits(logits, 1), truth, mask);
    const bool pass = std::abs(lu - 3 * std::log(20.0)) <= kLossTol && std::abs(lu_t - 3 * std::log(20.0)) <= kLossTol &&
                      lp == 0.0 && m.perplexity == std::exp(m.cross_entropy);
    return {pass, "uniform " + fmt("%.12f", lu) + " (3 ln 20 = " + fmt("%.12f", 3 * std::log(20.0)) + "), perfect " +
                      fmt("%g", lp) + ", PPL - exp(CE) = " + fmt("%g", m.perplexity - std::exp(m.cross_entropy))};
}

// ------------------------------------------------------------------ 11

Residue make_residue(char aa, Vec3 n, Vec3 ca, Vec3 c, Vec3 o, int seq, std::uint8_t missing = 0) {
    Residue r;
    r.aa = aa == 'X' ? kUnk : aa_from_char(aa);
    r.n = n, r.ca = ca, r.c = c, r.o = o;
    r.seq_index = seq;
    r.missing = missing;
    return r;
}

Outcome parser_conformance(const Context& ctx) {
    using testing::atom_line;
    int cases = 0, failed = 0;
    std::string failures;
    auto expect = [&](bool ok, const std::string& what) {
        ++cases;
        if (!ok) ++failed, failures += " " + what;
    };
    auto throws = [](auto&& fn, auto tag) {
        try {
            fn();
        } catch (const decltype(tag)&) {
            return true;
        } catch (...) {
            return false;
        }
        return false;
    };

    ProteinBackbone want;
    want.chain_id = "A";
    want.residues = {make_residue('A', {-0.677, -1.230, -0.491}, {-0.001, 0.064, -0.491}, {1.499, -0.110, -0.491},
                                  {2.030, -1.227, -0.502}, 1),
                     make_residue('G', {2.250, 0.983, -0.481}, {3.703, 0.953, -0.475}, {4.218, 2.384, -0.466},
                                  {3.432, 3.328, -0.466}, 2)};
    const ProteinBackbone well = parse_pdb(testing::ala_gly_pdb(), "A");
    expect(well == want, "well-formed");

    std::string no_ca = atom_line(1, "N", "ALA", 'A', 1, 0, 0, 0) + atom_line(2, "CA", "ALA", 'A', 1, 1.458, 0, 0) +
                        atom_line(3, "C", "ALA", 'A', 1, 2, 1.4, 0) + atom_line(4, "O", "ALA", 'A', 1, 1.5, 2.5, 0) +
                        atom_line(5, "N", "GLY", 'A', 2, 3.3, 1.4, 0) + atom_line(6, "C", "GLY", 'A', 2, 5, 2, 0) +
                        atom_line(7, "CA", "SER", 'A', 3, 6, 3, 0);
    ProteinBackbone want_no_ca;
    want_no_ca.chain_id = "A";
    want_no_ca.residues = {make_residue('A', {0, 0, 0}, {1.458, 0, 0}, {2, 1.4, 0}, {1.5, 2.5, 0}, 1),
                           make_residue('S', {6, 3, 0}, {6, 3, 0}, {6, 3, 0}, {6, 3, 0}, 3,
                                        kMissingN | kMissingC | kMissingO)};
    expect(parse_pdb(no_ca, "A") == want_no_ca, "missing-ca");

    const std::string unk = atom_line(1, "CA", "UNK", 'A', 1, 0, 0, 0) + atom_line(2, "CA", "MSE", 'A', 2, 3.8, 0, 0) +
                            atom_line(3, "CA", "TRP", 'A', 3, 7.6, 0, 0);
    expect(sequence_to_string(parse_pdb(unk, "A").sequence()) == "XXW", "unk");

    std::string garbled = atom_line(1, "CA", "ALA", 'A', 1, 0, 0, 0);
    garbled.replace(30, 8, "  abc.de");
    expect(throws([&] { parse_pdb(garbled, "A"); }, ParseError("")), "garbled-coordinate");
    expect(throws([&] { parse_pdb("ATOM      1  CA  ALA A   1\n", "A"); }, ParseError("")), "short-record");
    expect(throws([&] { parse_pdb("", "A"); }, ParseError("")), "empty");
    expect(throws([&] { parse_pdb(testing::ala_gly_pdb(), "B"); }, ChainNotFound("")), "chain");
    expect(throws([&] { parse_pdb(atom_line(1, "N", "ALA", 'A', 1, 0, 0, 0), "A"); }, EmptyBackbone("")), "no-ca");

    CounterRng rng(0x11);
    for (int i = 0; i < 20; ++i) {
        ProteinBackbone b = synthetic_backbone(10 + i, rng);
        b.chain_id = "A";
        b.residues[static_cast<std::size_t>(i % 5)].missing = kMissingO;
        b.residues[static_cast<std::size_t>(i % 5)].o = b.residues[static_cast<std::size_t>(i % 5)].ca;
        expect(decode_backbone(encode_backbone(b, true)) == b, "container-roundtrip");
        const fs::path path = ctx.work / "roundtrip.bkbn";
        save_blob(path.string(), backbone_to_blob(b, true));
        expect(backbone_from_blob(load_blob(path.string(), "BKBN")) == b, "file-roundtrip");
    }
    return {failed == 0, std::to_string(cases - failed) + "/" + std::to_string(cases) + " cases" +
                             (failed ? " failing:" + failures : "")};
}

struct Criterion {
    const char* name;
    std::function<Outcome(const Context&)> run;
};

const std::vector<Criterion>& criteria() {
    static const std::vector<Criterion> list = {
        {"se3_invariance", se3_invariance},
        {"formula_oracles", formula_oracles},
        {"gradient_fidelity", gradient_fidelity},
        {"resistance_monotonicity", resistance_monotonicity},
        {"softmax_sensitivity", softmax_sensitivity},
        {"directional_independence", directional_independence},
        {"return_mass", return_mass},
        {"toy_memorization", toy_memorization},
        {"recycling_monotonicity", recycling_monotonicity},
        {"loss_arithmetic", loss_arithmetic},
        {"parser_conformance", parser_conformance},
    };
    return list;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    Context ctx{fs::temp_directory_path() / "riga_acceptance"};
    for (int i = 1; i < argc; ++i) {
        const std::string a = argv[i];
        if (a == "--criterion" && i + 1 < argc) only = std::atoi(argv[++i]);
        else if (a == "--work" && i + 1 < argc) ctx.work = argv[++i];
        else {
            std::cerr << "usage: acceptance [--criterion N] [--work DIR]\n";
            return 2;
        }
    }
    fs::create_directories(ctx.work);
    const auto& list = criteria();
    if (only < 0 || only > static_cast<int>(list.size())) {
        std::cerr << "criterion must lie in 1.." << list.size() << "\n";
        return 2;
    }
    int failures = 0;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (only != 0 && static_cast<int>(i) + 1 != only) continue;
        Outcome o;
        try {
            o = list[i].run(ctx);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failures += o.pass ? 0 : 1;
        std::cout << (o.pass ? "PASS" : "FAIL") << " [" << i + 1 << "] " << list[i].name << ": " << o.detail
                  << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
