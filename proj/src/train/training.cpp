#include "riga/train/training.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

#include "riga/common/error.h"
#include "riga/structure/transform.h"

namespace riga::train {

std::vector<std::uint8_t> loss_mask(const std::vector<AminoAcid>& truth) {
    std::vector<std::uint8_t> mask(truth.size());
    for (std::size_t i = 0; i < truth.size(); ++i) mask[i] = truth[i] < 20 ? 1 : 0;
    return mask;
}

namespace {

int count_unmasked(const std::vector<std::uint8_t>& mask) {
    return static_cast<int>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

void check_truth(std::size_t n, const std::vector<AminoAcid>& truth, const std::vector<std::uint8_t>& mask) {
    if (truth.size() != n || mask.size() != n)
        throw ShapeError("truth and mask must have one entry per residue");
}

}  // namespace

double staged_loss(const std::vector<model::SequenceDistribution>& stages, const std::vector<AminoAcid>& truth,
                   const std::vector<std::uint8_t>& mask) {
    if (stages.empty()) throw InvalidParameter("staged loss needs at least one stage");
    const int n_unmasked = count_unmasked(mask);
    if (n_unmasked == 0) throw EmptyLoss("no unmasked residues");
    double total = 0.0;
    for (const auto& s : stages) {
        check_truth(static_cast<std::size_t>(s.probs.rows()), truth, mask);
        for (Eigen::Index i = 0; i < s.probs.rows(); ++i)
            if (mask[static_cast<std::size_t>(i)] && truth[static_cast<std::size_t>(i)] < 20)
                total -= std::log(s.probs(i, truth[static_cast<std::size_t>(i)]));
    }
    return total / n_unmasked;
}

template <typename T>
nn::Tensor<T> staged_loss(const std::vector<nn::Tensor<T>>& logits, const std::vector<AminoAcid>& truth,
                          const std::vector<std::uint8_t>& mask, double norm) {
    if (logits.empty()) throw InvalidParameter("staged loss needs at least one stage");
    std::vector<int> targets(truth.size());
    std::vector<std::uint8_t> m(mask);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        targets[i] = truth[i] < 20 ? truth[i] : 0;
        if (truth[i] >= 20) m[i] = 0;
    }
    const int n_unmasked = count_unmasked(m);
    if (n_unmasked == 0) throw EmptyLoss("no unmasked residues");
    nn::Tensor<T> total;
    for (const auto& l : logits) {
        check_truth(static_cast<std::size_t>(l.rows()), truth, mask);
        nn::Tensor<T> ce = nn::cross_entropy_sum<T>(l, targets, m);
        total = total.defined() ? nn::add(total, ce) : ce;
    }
    return nn::scale(total, static_cast<T>(1.0 / (norm > 0.0 ? norm : n_unmasked)));
}

Metrics compute_metrics(const model::SequenceDistribution& dist, const std::vector<AminoAcid>& truth,
                        const std::vector<std::uint8_t>& mask) {
    check_truth(static_cast<std::size_t>(dist.probs.rows()), truth, mask);
    const auto pred = model::argmax_sequence(dist);
    MetricsAccumulator acc;
    for (Eigen::Index i = 0; i < dist.probs.rows(); ++i) {
        const auto r = static_cast<std::size_t>(i);
        if (!mask[r] || truth[r] >= 20) continue;
        acc.ce_sum -= std::log(dist.probs(i, truth[r]));
        acc.correct += pred.tokens[r] == truth[r] ? 1.0 : 0.0;
        ++acc.residues;
    }
    return acc.result();
}

Metrics compute_metrics(const model::SequenceDistribution& dist, const std::vector<AminoAcid>& truth) {
    return compute_metrics(dist, truth, loss_mask(truth));
}

void MetricsAccumulator::add(const Metrics& m) {
    ce_sum += m.cross_entropy * m.residues;
    correct += m.recovery / 100.0 * m.residues;
    residues += m.residues;
}

Metrics MetricsAccumulator::result() const {
    Metrics m;
    m.residues = residues;
    if (residues == 0) return m;
    m.cross_entropy = ce_sum / residues;
    m.perplexity = std::exp(m.cross_entropy);
    m.recovery = 100.0 * correct / residues;
    return m;
}

double LrSchedule::at(int step) const {
    if (step <= 0) return 0.0;
    if (warmup > 0 && step <= warmup) return peak * static_cast<double>(step) / warmup;
    const int span = total - warmup;
    if (span <= 0) return peak;
    const double progress = std::min(1.0, static_cast<double>(step - warmup) / span);
    return peak * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

template <typename T>
double clip_grad_norm(const std::vector<nn::Tensor<T>>& params, double max_norm) {
    double sq = 0.0;
    for (const auto& p : params)
        if (p.has_grad()) sq += p.node()->grad.template cast<double>().squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const T factor = static_cast<T>(max_norm / norm);
        for (const auto& p : params)
            if (p.has_grad()) p.node()->grad *= factor;
    }
    return norm;
}

template <typename T>
AdamW<T>::AdamW(std::vector<nn::Tensor<T>> params, double weight_decay, double beta1, double beta2, double eps)
    : params_(std::move(params)), wd_(weight_decay), b1_(beta1), b2_(beta2), eps_(eps) {
    for (const auto& p : params_) {
        m_.push_back(nn::Matrix<T>::Zero(p.rows(), p.cols()));
        v_.push_back(nn::Matrix<T>::Zero(p.rows(), p.cols()));
    }
}

template <typename T>
void AdamW<T>::step(double lr) {
    ++t_;
    const double c1 = 1.0 - std::pow(b1_, t_);
    const double c2 = 1.0 - std::pow(b2_, t_);
    const T b1 = static_cast<T>(b1_), b2 = static_cast<T>(b2_);
    for (std::size_t k = 0; k < params_.size(); ++k) {
        auto& p = params_[k];
        auto& w = p.mutable_value();
        const nn::Matrix<T> g = p.grad();
        m_[k] = b1 * m_[k] + (T(1) - b1) * g;
        v_[k] = b2 * v_[k] + (T(1) - b2) * g.cwiseProduct(g);
        const T step = static_cast<T>(lr / c1);
        const T inv_c2 = static_cast<T>(1.0 / c2);
        const T eps = static_cast<T>(eps_);
        w *= static_cast<T>(1.0 - lr * wd_);
        w.array() -= step * m_[k].array() / ((v_[k].array() * inv_c2).sqrt() + eps);
    }
}

void TrainConfig::validate() const {
    if (!(lr >= 0.0)) throw InvalidParameter("lr must be >= 0");
    if (!(weight_decay >= 0.0)) throw InvalidParameter("weight_decay must be >= 0");
    if (warmup_steps < 0) throw InvalidParameter("warmup_steps must be >= 0");
    if (!(grad_clip_norm > 0.0)) throw InvalidParameter("grad_clip_norm must be > 0");
    if (batch_size < 1) throw InvalidParameter("batch_size must be >= 1");
    if (epochs < 1 || epochs > 100) throw InvalidParameter("epochs must lie in [1, 100]");
    if (max_steps < 0) throw InvalidParameter("max_steps must be >= 0");
    if (early_stop_patience < 1) throw InvalidParameter("early_stop_patience must be >= 1");
    if (val_fraction < 0.0 || val_fraction >= 1.0) throw InvalidParameter("val_fraction must lie in [0, 1)");
    if (noise_sigma < 0.0) throw InvalidParameter("noise_sigma must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0) throw InvalidParameter("dropout must lie in [0, 1)");
    if (recycles < 1) throw InvalidParameter("recycles must be >= 1");
}

nlohmann::json TrainConfig::to_json() const {
    return {{"lr", lr},
            {"weight_decay", weight_decay},
            {"warmup_steps", warmup_steps},
            {"schedule", "cosine"},
            {"grad_clip_norm", grad_clip_norm},
            {"batch_size", batch_size},
            {"epochs", epochs},
            {"max_steps", max_steps},
            {"early_stop_patience", early_stop_patience},
            {"val_fraction", val_fraction},
            {"noise_sigma", noise_sigma},
            {"dropout", dropout},
            {"recycles", recycles},
            {"seed", seed}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
    TrainConfig c;
    if (!j.is_object()) throw ConfigError("training config must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "lr") c.lr = v.get<double>();
            else if (key == "weight_decay") c.weight_decay = v.get<double>();
            else if (key == "warmup_steps") c.warmup_steps = v.get<int>();
            else if (key == "schedule") {
                if (v.get<std::string>() != "cosine") throw ConfigError("only the cosine schedule is supported");
            } else if (key == "grad_clip_norm") c.grad_clip_norm = v.get<double>();
            else if (key == "batch_size") c.batch_size = v.get<int>();
            else if (key == "epochs") c.epochs = v.get<int>();
            else if (key == "max_steps") c.max_steps = v.get<int>();
            else if (key == "early_stop_patience") c.early_stop_patience = v.get<int>();
            else if (key == "val_fraction") c.val_fraction = v.get<double>();
            else if (key == "noise_sigma") c.noise_sigma = v.get<double>();
            else if (key == "dropout") c.dropout = v.get<double>();
            else if (key == "recycles") c.recycles = v.get<int>();
            else if (key == "seed") c.seed = v.get<std::uint64_t>();
            else throw ConfigError("unknown training config key '" + key + "'");
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad training config value: ") + e.what());
    }
    c.validate();
    return c;
}

std::string log_csv_header() { return "epoch,step,stage,split,loss,ppl,recovery,lr"; }

std::string log_csv_row(const LogRow& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%s,%.17g,%.17g,%.17g,%.17g", r.epoch, r.step, r.stage, r.split.c_str(),
                  r.loss, r.ppl, r.recovery, r.lr);
    return buf;
}

template <typename T>
std::vector<Metrics> evaluate_stages(const model::RigaModel<T>& model, const std::vector<TrainExample>& corpus,
                                     const std::vector<int>& indices, const FeatureConfig& features,
                                     const model::EmbeddingProvider& structure_provider,
                                     const model::EmbeddingProvider& sequence_provider, int recycles,
                                     double* staged) {
    std::vector<MetricsAccumulator> acc(static_cast<std::size_t>(recycles));
    double loss_sum = 0.0;
    int residues = 0;
    for (int idx : indices) {
        const auto& ex = corpus[static_cast<std::size_t>(idx)];
        const ResidueGraph graph = build_knn_graph(ex.backbone, features, ex.secondary);
        const auto truth = ex.backbone.sequence();
        const auto mask = loss_mask(truth);
        const auto result =
            model::recycle_infer(model, graph, structure_provider, sequence_provider, recycles, &ex.backbone);
        for (int t = 0; t < recycles; ++t)
            acc[static_cast<std::size_t>(t)].add(compute_metrics(result.stages[static_cast<std::size_t>(t)], truth, mask));
        const int n = count_unmasked(mask);
        if (n > 0) {
            loss_sum += staged_loss(result.stages, truth, mask) * n;
            residues += n;
        }
    }
    if (staged) *staged = residues > 0 ? loss_sum / residues : 0.0;
    std::vector<Metrics> out;
    for (const auto& a : acc) out.push_back(a.result());
    return out;
}

namespace {

std::vector<LogRow> stage_rows(int epoch, int step, const std::string& split, double lr, double staged,
                               const std::vector<Metrics>& stages) {
    std::vector<LogRow> rows;
    const Metrics& last = stages.back();
    rows.push_back({epoch, step, 0, split, staged, last.perplexity, last.recovery, lr});
    for (std::size_t t = 0; t < stages.size(); ++t)
        rows.push_back({epoch, step, static_cast<int>(t + 1), split, stages[t].cross_entropy, stages[t].perplexity,
                        stages[t].recovery, lr});
    return rows;
}

}  // namespace

template <typename T>
TrainResult train_model(model::RigaModel<T>& model, const std::vector<TrainExample>& corpus,
                        const FeatureConfig& features, const TrainConfig& cfg,
                        const model::EmbeddingProvider& structure_provider,
                        const model::EmbeddingProvider& sequence_provider, const TrainHooks& hooks) {
    cfg.validate();
    if (corpus.empty()) throw InvalidParameter("training corpus is empty");
    if (std::abs(model.config().encoder.dropout - cfg.dropout) > 1e-12)
        throw ConfigError("model dropout and training dropout disagree");
    TrainResult result;

    const CounterRng root(cfg.seed);
    std::vector<int> order(corpus.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    int n_val = 0;
    if (cfg.val_fraction > 0.0 && corpus.size() >= 2) {
        CounterRng split_rng = root.fork(1);
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[split_rng.below(i)]);
        n_val = std::max(1, static_cast<int>(std::lround(cfg.val_fraction * static_cast<double>(corpus.size()))));
        n_val = std::min(n_val, static_cast<int>(corpus.size()) - 1);
    }
    result.val_indices.assign(order.begin(), order.begin() + n_val);
    result.train_indices.assign(order.begin() + n_val, order.end());
    std::sort(result.val_indices.begin(), result.val_indices.end());
    std::sort(result.train_indices.begin(), result.train_indices.end());

    const int n_train = static_cast<int>(result.train_indices.size());
    const int steps_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
    const int total_steps = cfg.max_steps > 0 ? cfg.max_steps : cfg.epochs * steps_per_epoch;
    const LrSchedule schedule{cfg.lr, cfg.warmup_steps, total_steps};

    auto params = model.params().tensors();
    AdamW<T> opt(params, cfg.weight_decay);
    model.params().zero_grad();

    auto emit = [&](const LogRow& row) {
        result.log.push_back(row);
        if (hooks.on_log) hooks.on_log(row);
    };

    double best_val = std::numeric_limits<double>::infinity();
    int stale = 0;
    int step = 0;
    int epoch = 0;
    while (step < total_steps) {
        ++epoch;
        if (cfg.max_steps == 0 && epoch > cfg.epochs) break;
        std::vector<int> epoch_order = result.train_indices;
        CounterRng shuffle = root.fork(0x1000 + static_cast<std::uint64_t>(epoch));
        for (std::size_t i = epoch_order.size(); i > 1; --i) std::swap(epoch_order[i - 1], epoch_order[shuffle.below(i)]);

        std::vector<MetricsAccumulator> acc(static_cast<std::size_t>(cfg.recycles));
        double loss_sum = 0.0;
        int loss_residues = 0;
        double lr = 0.0;
        for (int b = 0; b < steps_per_epoch && step < total_steps; ++b) {
            ++step;
            lr = schedule.at(step);
            const int begin = b * cfg.batch_size;
            const int end = std::min(n_train, begin + cfg.batch_size);

            int batch_residues = 0;
            for (int p = begin; p < end; ++p)
                batch_residues += count_unmasked(loss_mask(corpus[static_cast<std::size_t>(epoch_order[static_cast<std::size_t>(p)])].backbone.sequence()));
            if (batch_residues == 0) throw EmptyLoss("training batch has no unmasked residues");

            double batch_loss = 0.0;
            for (int p = begin; p < end; ++p) {
                const int idx = epoch_order[static_cast<std::size_t>(p)];
                const auto& ex = corpus[static_cast<std::size_t>(idx)];
                const std::uint64_t stream = (static_cast<std::uint64_t>(step) << 20) ^ static_cast<std::uint64_t>(idx);
                const ProteinBackbone noised =
                    inject_backbone_noise(ex.backbone, cfg.noise_sigma, root.fork(0x2000).fork(stream).next_u64());
                const ResidueGraph graph = build_knn_graph(noised, features, ex.secondary);
                const auto truth = ex.backbone.sequence();
                const auto mask = loss_mask(truth);
                const auto prior = structure_provider.embed_structure(graph.n, &noised);

                CounterRng drop = root.fork(0x3000).fork(stream);
                const nn::ForwardContext ctx{true, &drop};
                const auto trace = model::recycle_forward(model, graph, prior, sequence_provider, cfg.recycles, ctx);
                nn::Tensor<T> loss = staged_loss(trace.logits, truth, mask, batch_residues);
                const double value = static_cast<double>(loss.item());
                if (!std::isfinite(value))
                    throw TrainingDiverged("training loss became non-finite at step " + std::to_string(step), step);
                loss.backward();
                batch_loss += value;
                for (int t = 0; t < cfg.recycles; ++t) {
                    const auto dist = model::decode_logits(
                        trace.logits[static_cast<std::size_t>(t)].value().template cast<double>(), t + 1);
                    acc[static_cast<std::size_t>(t)].add(compute_metrics(dist, truth, mask));
                }
            }
            loss_sum += batch_loss * batch_residues;
            loss_residues += batch_residues;
            clip_grad_norm(params, cfg.grad_clip_norm);
            opt.step(lr);
            model.params().zero_grad();
        }
        result.epochs = epoch;
        std::vector<Metrics> train_stages;
        for (const auto& a : acc) train_stages.push_back(a.result());
        for (const auto& row : stage_rows(epoch, step, "train", lr, loss_sum / std::max(1, loss_residues), train_stages))
            emit(row);

        if (!result.val_indices.empty()) {
            double staged = 0.0;
            const auto val = evaluate_stages(model, corpus, result.val_indices, features, structure_provider,
                                             sequence_provider, cfg.recycles, &staged);
            for (const auto& row : stage_rows(epoch, step, "val", lr, staged, val)) emit(row);
            const double ppl = val.back().perplexity;
            if (ppl < best_val) {
                best_val = ppl;
                stale = 0;
            } else if (++stale >= cfg.early_stop_patience) {
                result.early_stopped = true;
                break;
            }
        }
    }
    result.steps = step;
    result.best_val_ppl = std::isfinite(best_val) ? best_val : 0.0;
    return result;
}

#define RIGA_INSTANTIATE_TRAIN(T)                                                                                     \
    template nn::Tensor<T> staged_loss(const std::vector<nn::Tensor<T>>&, const std::vector<AminoAcid>&,            \
                                       const std::vector<std::uint8_t>&, double);                                    \
    template double clip_grad_norm(const std::vector<nn::Tensor<T>>&, double);                                      \
    template class AdamW<T>;                                                                                          \
    template TrainResult train_model(model::RigaModel<T>&, const std::vector<TrainExample>&, const FeatureConfig&,  \
                                     const TrainConfig&, const model::EmbeddingProvider&,                            \
                                     const model::EmbeddingProvider&, const TrainHooks&);                            \
    template std::vector<Metrics> evaluate_stages(const model::RigaModel<T>&, const std::vector<TrainExample>&,      \
                                                  const std::vector<int>&, const FeatureConfig&,                     \
                                                  const model::EmbeddingProvider&, const model::EmbeddingProvider&,  \
                                                  int, double*);

RIGA_INSTANTIATE_TRAIN(float)
RIGA_INSTANTIATE_TRAIN(double)

}  // namespace riga::train
