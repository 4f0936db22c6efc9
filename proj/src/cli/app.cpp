#include "riga/cli/app.h"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "riga/cli/config.h"
#include "riga/common/error.h"
#include "riga/geometry/graph_container.h"
#include "riga/nn/checkpoint.h"
#include "riga/structure/container.h"
#include "riga/structure/pdb.h"
#include "riga/structure/synthetic.h"
#include "riga/theory/theory.h"

namespace riga::cli {

namespace fs = std::filesystem;

namespace {

ProteinBackbone load_structure(const std::string& path, const std::string& chain) {
    const std::string ext = fs::path(path).extension().string();
    if (ext == ".bkbn") return backbone_from_blob(load_blob(path, "BKBN"));
    return read_pdb_file(path, chain);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw InvalidParameter("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw InvalidParameter("failed writing '" + path + "'");
}

/// First record of a FASTA file. Residue letters must be one-letter codes.
std::vector<AminoAcid> read_fasta_sequence(const std::string& text) {
    std::istringstream in(text);
    std::string line, seq;
    bool header = false;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '>') {
            if (header) break;
            header = true;
            continue;
        }
        if (!header) throw ParseError("FASTA record does not start with '>'");
        seq += line;
    }
    if (!header || seq.empty()) throw ParseError("FASTA file has no sequence");
    return sequence_from_string(seq);
}

std::string fasta(const std::string& name, const std::vector<AminoAcid>& seq) {
    std::string out = ">" + name + "\n";
    const std::string s = sequence_to_string(seq);
    for (std::size_t i = 0; i < s.size(); i += 60) out += s.substr(i, 60) + "\n";
    return out;
}

std::vector<int> secondary_for(const std::string& structure_path, const std::string& inline_ss) {
    if (!inline_ss.empty()) return parse_secondary_structure(inline_ss);
    const fs::path ss = fs::path(structure_path).replace_extension(".ss");
    if (!fs::exists(ss)) return {};
    std::string text = read_text(ss.string());
    text.erase(std::remove(text.begin(), text.end(), '\n'), text.end());
    return parse_secondary_structure(text);
}

std::vector<std::string> dataset_files(const std::string& dir) {
    if (!fs::is_directory(dir)) throw InvalidParameter("'" + dir + "' is not a directory");
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto ext = e.path().extension().string();
        if (ext == ".pdb" || ext == ".ent" || ext == ".bkbn") files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    return files;
}

struct Providers {
    std::shared_ptr<model::EmbeddingProvider> structure;
    std::shared_ptr<model::EmbeddingProvider> sequence;
};

Providers make_providers(const ProviderConfig& p, const model::ModelConfig& m) {
    return {model::make_provider(p.structure, model::PriorKind::Structure, m.struct_dim, p.stub_seed),
            model::make_provider(p.sequence, model::PriorKind::Sequence, m.seq_dim, p.stub_seed)};
}

RunConfig config_from(const std::string& path) { return path.empty() ? RunConfig{} : RunConfig::load(path); }

nlohmann::json metrics_json(const train::Metrics& m) {
    return {{"cross_entropy", m.cross_entropy}, {"ppl", m.perplexity}, {"recovery", m.recovery}, {"residues", m.residues}};
}

// ---------------------------------------------------------------- featurize

struct FeaturizeArgs {
    std::string pdb, chain, config, ss, out;
    bool float64 = false;
};

int cmd_featurize(const FeaturizeArgs& a, std::ostream& out) {
    const RunConfig cfg = config_from(a.config);
    const ProteinBackbone b = load_structure(a.pdb, a.chain);
    FeaturizedGraph fg;
    fg.graph = build_knn_graph(b, cfg.features, secondary_for(a.pdb, a.ss));
    fg.config = cfg.features;
    fg.chain_id = b.chain_id;
    fg.sequence = sequence_to_string(b.sequence());
    Blob blob = graph_to_blob(fg);
    if (a.float64)
        for (auto& block : blob.blocks)
            if (block.dtype == "float32") {
                const auto v = block.to_doubles();
                block = make_float_block(block.name, block.shape, v, true);
            }
    save_blob(a.out, blob);
    out << "wrote " << a.out << " (n=" << fg.graph.n << ", k=" << fg.graph.k << ", node_dim=" << fg.graph.node_feats.cols()
        << ", edge_dim=" << fg.graph.edge_feats.cols() << ")\n";
    return 0;
}

// -------------------------------------------------------------------- train

struct TrainArgs {
    std::string config, data, out;
    int synthetic = 0, min_len = 30, max_len = 60;
    std::optional<std::uint64_t> seed;
    int steps = -1;
    std::string precision;
};

template <typename T>
int run_train(const RunConfig& cfg, std::uint64_t seed, const std::vector<train::TrainExample>& corpus,
              const std::string& out_dir, std::ostream& out) {
    train::TrainConfig tc = cfg.training;
    tc.seed = seed;
    const model::ModelConfig mc = cfg.resolved_model();
    model::RigaModel<T> model(mc, CounterRng(seed).fork(0x4d4f44454c).next_u64());
    const Providers prov = make_providers(cfg.providers, mc);

    fs::create_directories(out_dir);
    std::ofstream log(fs::path(out_dir) / "metrics.csv");
    if (!log) throw InvalidParameter("cannot write metrics log in '" + out_dir + "'");
    log << train::log_csv_header() << "\n";
    train::TrainHooks hooks;
    hooks.on_log = [&](const train::LogRow& row) {
        log << train::log_csv_row(row) << "\n";
        log.flush();
        if (row.stage == 0)
            out << "epoch " << row.epoch << " step " << row.step << " " << row.split << " loss " << row.loss << " ppl "
                << row.ppl << " recovery " << row.recovery << "\n";
    };
    const train::TrainResult res = train::train_model(model, corpus, cfg.features, tc, *prov.structure, *prov.sequence, hooks);

    double staged = 0.0;
    const auto final_train = train::evaluate_stages(model, corpus, res.train_indices, cfg.features, *prov.structure,
                                                    *prov.sequence, tc.recycles, &staged);
    nlohmann::json summary = {{"seed", seed},
                              {"steps", res.steps},
                              {"epochs", res.epochs},
                              {"early_stopped", res.early_stopped},
                              {"train_indices", res.train_indices},
                              {"val_indices", res.val_indices},
                              {"train_staged_loss", staged},
                              {"train_final", metrics_json(final_train.back())}};
    if (!res.val_indices.empty()) summary["best_val_ppl"] = res.best_val_ppl;

    nlohmann::json extra = {{"run_config", cfg.to_json()},
                            {"feature_config", feature_config_to_json(cfg.features)},
                            {"seed", seed},
                            {"steps", res.steps}};
    save_blob((fs::path(out_dir) / "checkpoint.ckpt").string(),
              model::model_to_blob(model, CounterRng(seed, static_cast<std::uint64_t>(res.steps)), extra,
                                   std::is_same_v<T, double>));
    write_text((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
    out << "final train recovery " << final_train.back().recovery << " ppl " << final_train.back().perplexity << "\n";
    return 0;
}

int cmd_train(const TrainArgs& a, std::ostream& out) {
    RunConfig cfg = config_from(a.config);
    if (!a.precision.empty()) cfg.train_precision = a.precision;
    if (a.steps >= 0) cfg.training.max_steps = a.steps;
    cfg.training.validate();
    const std::uint64_t seed = resolve_seed(a.seed, cfg);

    std::vector<train::TrainExample> corpus;
    if (!a.data.empty()) {
        for (const auto& f : dataset_files(a.data)) corpus.push_back({load_structure(f, ""), secondary_for(f, "")});
    }
    if (a.synthetic > 0)
        for (auto& b : synthetic_corpus(a.synthetic, a.min_len, a.max_len, CounterRng(seed).fork(0x53594e).next_u64()))
            corpus.push_back({std::move(b), {}});
    if (corpus.empty()) throw InvalidParameter("no training data (use --data DIR or --synthetic N)");

    if (cfg.train_precision == "float64") return run_train<double>(cfg, seed, corpus, a.out, out);
    return run_train<float>(cfg, seed, corpus, a.out, out);
}

// -------------------------------------------------------------------- infer

struct InferArgs {
    std::string checkpoint, pdb, chain, features, ss, reference, reference_seq, out, dump_attention, precision;
    std::string struct_prior, seq_prior;
    int recycles = -1;  // unset: checkpoint config
    std::optional<std::uint64_t> seed;
};

struct LoadedCheckpoint {
    Blob blob;
    RunConfig run;
    FeatureConfig features;
};

LoadedCheckpoint load_checkpoint(const std::string& path) {
    LoadedCheckpoint c;
    c.blob = load_blob(path, "CKPT");
    if (c.blob.header.contains("run_config")) c.run = RunConfig::from_json(c.blob.header["run_config"]);
    c.features = c.blob.header.contains("feature_config") ? feature_config_from_json(c.blob.header["feature_config"])
                                                          : c.run.features;
    return c;
}

ProviderConfig providers_with_overrides(ProviderConfig p, const std::string& s, const std::string& q) {
    if (!s.empty()) p.structure = s;
    if (!q.empty()) p.sequence = q;
    return p;
}

template <typename T>
model::RecycleResult infer_with(const Blob& blob, const ResidueGraph& graph, const Providers& prov, int recycles,
                                const ProteinBackbone* backbone) {
    const auto model = model::model_from_blob<T>(blob);
    return model::recycle_infer(*model, graph, *prov.structure, *prov.sequence, recycles, backbone);
}

std::string stages_csv(const model::RecycleResult& r) {
    std::ostringstream s;
    s << "stage,residue";
    for (int c = 0; c < 20; ++c) s << "," << aa_to_char(static_cast<AminoAcid>(c));
    s << "\n";
    s.precision(9);
    for (const auto& st : r.stages)
        for (Eigen::Index i = 0; i < st.probs.rows(); ++i) {
            s << st.stage << "," << i;
            for (Eigen::Index c = 0; c < st.probs.cols(); ++c) s << "," << st.probs(i, c);
            s << "\n";
        }
    return s.str();
}

Blob attention_blob(const ResidueGraph& g, const model::RecycleResult& r) {
    Blob blob;
    blob.kind = "ATTN";
    blob.header = {{"format", "riga-attention"}, {"n", g.n}, {"k", g.k}, {"stages", r.alphas.size()},
                   {"layers", r.alphas.empty() ? 0 : r.alphas.front().size()}};
    blob.blocks.push_back(make_int32_block("neighbors", {g.n, g.k}, g.neighbors));
    for (std::size_t t = 0; t < r.alphas.size(); ++t)
        for (std::size_t l = 0; l < r.alphas[t].size(); ++l) {
            const auto& a = r.alphas[t][l];
            blob.blocks.push_back(make_float_block("alpha.stage" + std::to_string(t + 1) + ".layer" + std::to_string(l + 1),
                                                   {a.rows(), a.cols()}, std::span<const double>(a.data(), a.size())));
        }
    return blob;
}

int cmd_infer(const InferArgs& a, std::ostream& out, std::ostream& err) {
    if (a.pdb.empty() == a.features.empty()) throw InvalidParameter("give exactly one of --pdb or --features");
    const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
    const model::ModelConfig mc = model::model_config_from_blob(ck.blob);
    const Providers prov = make_providers(providers_with_overrides(ck.run.providers, a.struct_prior, a.seq_prior), mc);
    const int recycles = a.recycles >= 0 ? a.recycles : ck.run.recycles;
    const std::string precision = a.precision.empty() ? ck.run.infer_precision : a.precision;

    ResidueGraph graph;
    std::optional<ProteinBackbone> backbone;
    std::string name;
    std::vector<AminoAcid> native;
    if (!a.pdb.empty()) {
        backbone = load_structure(a.pdb, a.chain);
        graph = build_knn_graph(*backbone, ck.features, secondary_for(a.pdb, a.ss));
        native = backbone->sequence();
        name = fs::path(a.pdb).stem().string();
    } else {
        const FeaturizedGraph fg = graph_from_blob(load_blob(a.features, "FEAT"));
        graph = fg.graph;
        native = sequence_from_string(fg.sequence);
        name = fs::path(a.features).stem().string();
    }

    const model::RecycleResult r = precision == "float64"
                                       ? infer_with<double>(ck.blob, graph, prov, recycles, backbone ? &*backbone : nullptr)
                                       : infer_with<float>(ck.blob, graph, prov, recycles, backbone ? &*backbone : nullptr);

    std::vector<AminoAcid> reference;
    if (!a.reference.empty()) reference = read_fasta_sequence(read_text(a.reference));
    else if (!a.reference_seq.empty()) reference = sequence_from_string(a.reference_seq);
    nlohmann::json report = {{"name", name},
                             {"recycles", recycles},
                             {"sequence", sequence_to_string(r.final_sequence.tokens)}};
    if (!reference.empty()) {
        if (reference.size() != r.final_sequence.tokens.size())
            throw ShapeError("reference has " + std::to_string(reference.size()) + " residues, structure has " +
                             std::to_string(r.final_sequence.tokens.size()));
        auto stages = nlohmann::json::array();
        for (const auto& st : r.stages) stages.push_back(metrics_json(train::compute_metrics(st, reference)));
        report["stages"] = stages;
        const auto last = train::compute_metrics(r.stages.back(), reference);
        err << "recovery " << last.recovery << " ppl " << last.perplexity << "\n";
    }
    const std::string fa = fasta(name + " recycles=" + std::to_string(recycles), r.final_sequence.tokens);
    out << fa;
    if (!a.out.empty()) {
        write_text(a.out + ".fasta", fa);
        write_text(a.out + ".stages.csv", stages_csv(r));
        write_text(a.out + ".json", report.dump(2) + "\n");
    }
    if (!a.dump_attention.empty()) save_blob(a.dump_attention, attention_blob(graph, r));
    return 0;
}

// --------------------------------------------------------------------- eval

struct EvalArgs {
    std::string checkpoint, data, out, precision, struct_prior, seq_prior;
    int recycles = -1;  // unset: checkpoint config
    int jobs = 1;
    std::optional<std::uint64_t> seed;
};

struct EvalRow {
    std::string name;
    std::string status = "ok";
    train::Metrics metrics;
    std::string error;
};

template <typename T>
void eval_all(const LoadedCheckpoint& ck, const Providers& prov, int recycles, const std::vector<std::string>& files,
              std::vector<EvalRow>& rows, int jobs) {
    const auto model = model::model_from_blob<T>(ck.blob);
    auto work = [&](std::size_t i) {
        EvalRow& row = rows[i];
        row.name = fs::path(files[i]).stem().string();
        try {
            const ProteinBackbone b = load_structure(files[i], "");
            std::vector<AminoAcid> ref = b.sequence();
            const fs::path fa = fs::path(files[i]).replace_extension(".fasta");
            if (fs::exists(fa)) ref = read_fasta_sequence(read_text(fa.string()));
            if (ref.size() != b.size()) throw ShapeError("reference length differs from the structure");
            const ResidueGraph g = build_knn_graph(b, ck.features, secondary_for(files[i], ""));
            const auto r = model::recycle_infer(*model, g, *prov.structure, *prov.sequence, recycles, &b);
            row.metrics = train::compute_metrics(r.stages.back(), ref);
        } catch (const std::exception& e) {
            row.status = "error";
            row.error = e.what();
        }
    };
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) work(i);
    };
    std::vector<std::thread> pool;
    for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
}

std::string csv_field(std::string s) {
    std::replace(s.begin(), s.end(), '\n', ' ');
    if (s.find_first_of(",\"") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
    const model::ModelConfig mc = model::model_config_from_blob(ck.blob);
    const Providers prov = make_providers(providers_with_overrides(ck.run.providers, a.struct_prior, a.seq_prior), mc);
    const int recycles = a.recycles >= 0 ? a.recycles : ck.run.recycles;
    const auto files = dataset_files(a.data);
    if (files.empty()) throw InvalidParameter("dataset '" + a.data + "' has no structures");
    if (a.jobs < 1) throw InvalidParameter("--jobs must be >= 1");

    std::vector<EvalRow> rows(files.size());
    const std::string precision = a.precision.empty() ? ck.run.infer_precision : a.precision;
    if (precision == "float64") eval_all<double>(ck, prov, recycles, files, rows, a.jobs);
    else eval_all<float>(ck, prov, recycles, files, rows, a.jobs);

    train::MetricsAccumulator total;
    std::ostringstream csv;
    csv.precision(12);
    csv << "name,status,residues,recovery,ppl,cross_entropy,error\n";
    for (const auto& r : rows) {
        csv << csv_field(r.name) << "," << r.status << "," << r.metrics.residues << ",";
        if (r.status == "ok") {
            csv << r.metrics.recovery << "," << r.metrics.perplexity << "," << r.metrics.cross_entropy << ",\n";
            total.add(r.metrics);
        } else {
            csv << ",,," << csv_field(r.error) << "\n";
        }
    }
    const train::Metrics agg = total.result();
    csv << "ALL,aggregate," << agg.residues << "," << agg.recovery << "," << agg.perplexity << "," << agg.cross_entropy
        << ",\n";
    if (a.out.empty()) out << csv.str();
    else write_text(a.out, csv.str());
    return 0;
}

// ------------------------------------------------------------------- theory

struct TheoryArgs {
    std::string suite, graph = "star3", checkpoint, config, out, data;
    int count = -1, max_n = 12, length = 40, recycles = 3;
    double eps = 1e-4;
    std::optional<std::uint64_t> seed;
};

theory::AttentionGraph named_attention_graph(const std::string& name) {
    theory::AttentionGraph g;
    if (name == "pair") {
        g.n = 2;
        g.receiver = {0, 1};
        g.neighbor = {1, 0};
        g.weight = {1.0, 1.0};
    } else if (name.rfind("star", 0) == 0) {
        int m = 0;
        try {
            m = std::stoi(name.substr(4));
        } catch (const std::exception&) {
            throw InvalidParameter("unknown graph '" + name + "' (use pair or starM)");
        }
        if (m < 1) throw InvalidParameter("star graph needs at least one leaf");
        g.n = m + 1;
        for (int leaf = 1; leaf <= m; ++leaf) {
            g.receiver.push_back(0);
            g.neighbor.push_back(leaf);
            g.weight.push_back(1.0 / m);
            g.receiver.push_back(leaf);
            g.neighbor.push_back(0);
            g.weight.push_back(1.0);
        }
    } else {
        throw InvalidParameter("unknown graph '" + name + "' (use pair or starM)");
    }
    return g;
}

std::unique_ptr<model::RigaModel<double>> theory_model(const TheoryArgs& a, const RunConfig& cfg, std::uint64_t seed,
                                                       FeatureConfig& features, ProviderConfig& providers) {
    if (!a.checkpoint.empty()) {
        const LoadedCheckpoint ck = load_checkpoint(a.checkpoint);
        features = ck.features;
        providers = ck.run.providers;
        return model::model_from_blob<double>(ck.blob);
    }
    features = cfg.features;
    providers = cfg.providers;
    return std::make_unique<model::RigaModel<double>>(cfg.resolved_model(), CounterRng(seed).fork(0x4d4f44454c).next_u64());
}

std::vector<ProteinBackbone> theory_structures(const TheoryArgs& a, std::uint64_t seed, int count) {
    std::vector<ProteinBackbone> out;
    if (!a.data.empty()) {
        for (const auto& f : dataset_files(a.data)) out.push_back(load_structure(f, ""));
        return out;
    }
    CounterRng rng = CounterRng(seed).fork(0x544845);
    for (int i = 0; i < count; ++i) out.push_back(synthetic_backbone(a.length, rng));
    return out;
}

std::string series_csv(const std::vector<std::pair<std::string, std::vector<double>>>& cols) {
    std::ostringstream s;
    s.precision(12);
    s << "layer";
    std::size_t rows = 0;
    for (const auto& [name, v] : cols) {
        s << "," << name;
        rows = std::max(rows, v.size());
    }
    s << "\n";
    for (std::size_t r = 0; r < rows; ++r) {
        s << r;
        for (const auto& [name, v] : cols) {
            s << ",";
            if (r < v.size()) s << v[r];
        }
        s << "\n";
    }
    return s.str();
}

int cmd_theory(const TheoryArgs& a, std::ostream& out) {
    const RunConfig cfg = config_from(a.config);
    const std::uint64_t seed = resolve_seed(a.seed, cfg);
    nlohmann::json report = {{"suite", a.suite}, {"seed", seed}};
    std::string csv;
    bool passed = true;

    if (a.suite == "resistance") {
        const auto s = theory::resistance_sweep(a.count > 0 ? a.count : 200, a.max_n, seed);
        report["result"] = s.to_json();
        passed = s.violations == 0 && s.triangle_violations == 0 && s.max_sherman_morrison_residual <= 1e-8 &&
                 s.max_pinv_residual <= 1e-9;
    } else if (a.suite == "sensitivity") {
        CounterRng rng(seed);
        const auto fixtures = theory::random_sensitivity_fixtures(a.count > 0 ? a.count : 1000, rng);
        const auto rep = theory::softmax_sensitivity_check(fixtures, a.eps);
        report["result"] = rep.to_json();
        report["result"]["eps"] = a.eps;
        passed = rep.violations == 0;
    } else if (a.suite == "return-mass") {
        if (a.graph == "model") {
            FeatureConfig features;
            ProviderConfig pc;
            const auto m = theory_model(a, cfg, seed, features, pc);
            const Providers prov = make_providers(pc, m->config());
            std::vector<ResidueGraph> graphs;
            for (const auto& b : theory_structures(a, seed, a.count > 0 ? a.count : 4))
                graphs.push_back(build_knn_graph(b, features));
            const auto p = theory::contraction_profile(*m, graphs, *prov.structure, *prov.sequence);
            report["result"] = p.to_json();
            csv = series_csv({{"directional", p.directional}, {"symmetric", p.symmetric}});
        } else {
            const auto r = theory::return_mass(named_attention_graph(a.graph));
            report["result"] = {{"graph", a.graph}, {"per_node", r.per_node}, {"mean", r.mean}};
        }
    } else if (a.suite == "contraction") {
        FeatureConfig features;
        ProviderConfig pc;
        const auto m = theory_model(a, cfg, seed, features, pc);
        const Providers prov = make_providers(pc, m->config());
        std::vector<ResidueGraph> graphs;
        for (const auto& b : theory_structures(a, seed, a.count > 0 ? a.count : 4))
            graphs.push_back(build_knn_graph(b, features));
        const auto p = theory::contraction_profile(*m, graphs, *prov.structure, *prov.sequence);
        report["result"] = p.to_json();
        csv = series_csv({{"directional", p.directional}, {"symmetric", p.symmetric}});
    } else if (a.suite == "oversmoothing") {
        FeatureConfig features;
        ProviderConfig pc;
        const auto m = theory_model(a, cfg, seed, features, pc);
        const Providers prov = make_providers(pc, m->config());
        const auto structures = theory_structures(a, seed, 1);
        if (structures.empty()) throw InvalidParameter("no structure to profile");
        const auto p = theory::oversmoothing_profile(*m, build_knn_graph(structures.front(), features), *prov.structure,
                                                     *prov.sequence);
        report["result"] = p.to_json();
        csv = series_csv({{"with_bridge", p.with_bridge}, {"without_bridge", p.without_bridge}});
    } else if (a.suite == "recycling") {
        if (a.checkpoint.empty()) throw InvalidParameter("the recycling suite needs --checkpoint");
        if (a.recycles < 1) throw InvalidParameter("recycles must be >= 1");
        FeatureConfig features;
        ProviderConfig pc;
        const auto m = theory_model(a, cfg, seed, features, pc);
        const Providers prov = make_providers(pc, m->config());
        std::vector<train::TrainExample> corpus;
        for (auto& b : theory_structures(a, seed, a.count > 0 ? a.count : 5)) corpus.push_back({std::move(b), {}});
        std::vector<double> plain(static_cast<std::size_t>(a.recycles), 0.0), oracle(plain);
        int residues = 0;
        for (const auto& ex : corpus) {
            const auto truth = ex.backbone.sequence();
            const auto mask = train::loss_mask(truth);
            const int n = static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
            if (n == 0) continue;
            const ResidueGraph g = build_knn_graph(ex.backbone, features);
            const model::OracleSequenceProvider oracle_prov(prov.sequence, truth);
            const auto rp = model::recycle_infer(*m, g, *prov.structure, *prov.sequence, a.recycles, &ex.backbone);
            const auto ro = model::recycle_infer(*m, g, *prov.structure, oracle_prov, a.recycles, &ex.backbone);
            for (int t = 0; t < a.recycles; ++t) {
                plain[static_cast<std::size_t>(t)] += train::staged_loss({rp.stages[static_cast<std::size_t>(t)]}, truth, mask) * n;
                oracle[static_cast<std::size_t>(t)] += train::staged_loss({ro.stages[static_cast<std::size_t>(t)]}, truth, mask) * n;
            }
            residues += n;
        }
        if (residues == 0) throw EmptyLoss("no unmasked residues in the recycling set");
        for (auto& v : plain) v /= residues;
        for (auto& v : oracle) v /= residues;
        const auto rp = theory::recycling_monotonicity_report(plain);
        const auto ro = theory::recycling_monotonicity_report(oracle);
        report["result"] = {{"provider", rp.to_json()}, {"oracle", ro.to_json()}};
        csv = series_csv({{"provider", plain}, {"oracle", oracle}});
        passed = ro.final_not_worse;
    } else {
        throw InvalidParameter("unknown suite '" + a.suite + "'");
    }
    report["passed"] = passed;
    const std::string text = report.dump(2) + "\n";
    if (a.out.empty()) {
        out << text;
    } else {
        write_text(a.out + ".json", text);
        if (!csv.empty()) write_text(a.out + ".csv", csv);
    }
    return passed ? 0 : kExitCheckFailed;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Inverse folding with geometric attention and cascaded recycling", "riga"};
    app.require_subcommand(1);

    FeaturizeArgs fa;
    auto* feat = app.add_subcommand("featurize", "Featurize a PDB chain into a graph container");
    feat->add_option("--pdb", fa.pdb, "PDB or .bkbn file")->required();
    feat->add_option("--chain", fa.chain, "Chain identifier (default: first chain)");
    feat->add_option("--config", fa.config, "Run config JSON");
    feat->add_option("--ss", fa.ss, "Secondary structure string, one DSSP letter per residue");
    feat->add_option("--out", fa.out, "Output container")->required();
    feat->add_flag("--float64", fa.float64, "Store feature blocks as float64");

    TrainArgs ta;
    std::uint64_t train_seed = 0;
    auto* tr = app.add_subcommand("train", "Train a model");
    tr->add_option("--config", ta.config, "Run config JSON");
    tr->add_option("--data", ta.data, "Directory of .pdb/.bkbn structures");
    tr->add_option("--synthetic", ta.synthetic, "Add N synthetic backbones");
    tr->add_option("--min-len", ta.min_len, "Synthetic minimum length");
    tr->add_option("--max-len", ta.max_len, "Synthetic maximum length");
    tr->add_option("--steps", ta.steps, "Override training.max_steps");
    tr->add_option("--precision", ta.precision, "float32 or float64")->check(CLI::IsMember({"float32", "float64"}));
    auto* tr_seed = tr->add_option("--seed", train_seed, "Seed (falls back to config, then RIGA_SEED)");
    tr->add_option("--out", ta.out, "Output directory")->required();

    InferArgs ia;
    std::uint64_t infer_seed = 0;
    auto* inf = app.add_subcommand("infer", "Design a sequence for one structure");
    inf->add_option("--checkpoint", ia.checkpoint, "Checkpoint file")->required();
    inf->add_option("--pdb", ia.pdb, "PDB or .bkbn file");
    inf->add_option("--chain", ia.chain, "Chain identifier");
    inf->add_option("--features", ia.features, "Feature container instead of a structure");
    inf->add_option("--ss", ia.ss, "Secondary structure string");
    inf->add_option("--recycles", ia.recycles, "Recycling stages T (default from checkpoint config, 3)");
    inf->add_option("--struct-prior", ia.struct_prior, "stub or embedding file/directory");
    inf->add_option("--seq-prior", ia.seq_prior, "stub or embedding file/directory");
    inf->add_option("--reference", ia.reference, "Reference FASTA for recovery/PPL");
    inf->add_option("--reference-seq", ia.reference_seq, "Reference sequence string");
    inf->add_option("--precision", ia.precision, "float32 or float64")->check(CLI::IsMember({"float32", "float64"}));
    inf->add_option("--dump-attention", ia.dump_attention, "Write per-stage, per-layer attention container");
    inf->add_option("--out", ia.out, "Output prefix for .fasta, .stages.csv and .json");
    auto* inf_seed = inf->add_option("--seed", infer_seed, "Seed (inference is deterministic)");

    EvalArgs ea;
    std::uint64_t eval_seed = 0;
    auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset directory");
    ev->add_option("--checkpoint", ea.checkpoint, "Checkpoint file")->required();
    ev->add_option("--data", ea.data, "Directory of structures (optional <name>.fasta references)")->required();
    ev->add_option("--out", ea.out, "Metrics CSV (default stdout)");
    ev->add_option("--recycles", ea.recycles, "Recycling stages T");
    ev->add_option("--struct-prior", ea.struct_prior, "stub or embedding file/directory");
    ev->add_option("--seq-prior", ea.seq_prior, "stub or embedding file/directory");
    ev->add_option("--precision", ea.precision, "float32 or float64")->check(CLI::IsMember({"float32", "float64"}));
    ev->add_option("--jobs", ea.jobs, "Proteins evaluated in parallel");
    auto* ev_seed = ev->add_option("--seed", eval_seed, "Seed (evaluation is deterministic)");

    TheoryArgs th;
    std::uint64_t theory_seed = 0;
    auto* theo = app.add_subcommand("theory", "Run a theory verification suite");
    theo->add_option("--suite", th.suite, "resistance|return-mass|sensitivity|contraction|recycling|oversmoothing")
        ->required();
    theo->add_option("--graph", th.graph, "return-mass graph: pair, starM, or model");
    theo->add_option("--count", th.count, "Number of fixtures, graphs or structures");
    theo->add_option("--max-n", th.max_n, "Largest random graph (resistance)");
    theo->add_option("--eps", th.eps, "Perturbation size (sensitivity)");
    theo->add_option("--length", th.length, "Synthetic backbone length");
    theo->add_option("--recycles", th.recycles, "Stages (recycling)");
    theo->add_option("--checkpoint", th.checkpoint, "Model checkpoint (default: random init from config)");
    theo->add_option("--data", th.data, "Structures instead of synthetic backbones");
    theo->add_option("--config", th.config, "Run config JSON");
    theo->add_option("--out", th.out, "Output prefix for .json and .csv");
    auto* th_seed = theo->add_option("--seed", theory_seed, "Seed (falls back to config, then RIGA_SEED)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 1;
    }

    try {
        if (*feat) return cmd_featurize(fa, out);
        if (*tr) {
            if (*tr_seed) ta.seed = train_seed;
            return cmd_train(ta, out);
        }
        if (*inf) {
            if (*inf_seed) ia.seed = infer_seed;
            return cmd_infer(ia, out, err);
        }
        if (*ev) {
            if (*ev_seed) ea.seed = eval_seed;
            return cmd_eval(ea, out);
        }
        if (*theo) {
            if (*th_seed) th.seed = theory_seed;
            return cmd_theory(th, out);
        }
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace riga::cli
