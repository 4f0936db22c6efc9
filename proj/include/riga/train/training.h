#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "riga/model/riga_model.h"

namespace riga::train {

/// 1 where the native residue is one of the 20 standard amino acids.
std::vector<std::uint8_t> loss_mask(const std::vector<AminoAcid>& truth);

/**
 * L = -(1/N) Σ_t Σ_i log P_t(i, y_i) over unmasked residues, N = unmasked
 * count. No division by the stage count. Throws EmptyLoss when N = 0 and
 * ShapeError when stages disagree on n.
 */
double staged_loss(const std::vector<model::SequenceDistribution>& stages, const std::vector<AminoAcid>& truth,
                   const std::vector<std::uint8_t>& mask);

/// Same objective on logits, differentiable. `norm` overrides N (batches).
template <typename T>
nn::Tensor<T> staged_loss(const std::vector<nn::Tensor<T>>& logits, const std::vector<AminoAcid>& truth,
                          const std::vector<std::uint8_t>& mask, double norm = 0.0);

struct Metrics {
    double cross_entropy = 0.0;  // mean over unmasked residues
    double perplexity = 1.0;     // exp(cross_entropy)
    double recovery = 0.0;       // percent of argmax matches over unmasked residues
    int residues = 0;
};

Metrics compute_metrics(const model::SequenceDistribution& dist, const std::vector<AminoAcid>& truth,
                        const std::vector<std::uint8_t>& mask);
Metrics compute_metrics(const model::SequenceDistribution& dist, const std::vector<AminoAcid>& truth);

/// Pools residue counts across proteins.
struct MetricsAccumulator {
    double ce_sum = 0.0;
    double correct = 0.0;
    int residues = 0;
    void add(const Metrics& m);
    Metrics result() const;
};

/// Linear warmup to `peak` over `warmup` steps, then cosine to 0 at `total`.
/// Steps are 1-based.
struct LrSchedule {
    double peak = 1e-3;
    int warmup = 1000;
    int total = 1;
    double at(int step) const;
};

/// Scales gradients so the global norm is at most `max_norm`; returns the
/// norm before clipping.
template <typename T>
double clip_grad_norm(const std::vector<nn::Tensor<T>>& params, double max_norm);

/// Decoupled weight decay Adam.
template <typename T>
class AdamW {
public:
    AdamW(std::vector<nn::Tensor<T>> params, double weight_decay = 1e-4, double beta1 = 0.9, double beta2 = 0.999,
          double eps = 1e-8);
    void step(double lr);
    int steps() const { return t_; }

private:
    std::vector<nn::Tensor<T>> params_;
    std::vector<nn::Matrix<T>> m_, v_;
    double wd_, b1_, b2_, eps_;
    int t_ = 0;
};

struct TrainConfig {
    double lr = 1e-3;
    double weight_decay = 1e-4;
    int warmup_steps = 1000;
    double grad_clip_norm = 1.0;
    int batch_size = 8;
    int epochs = 100;
    /// > 0: train exactly this many optimizer steps; the epoch cap is lifted.
    int max_steps = 0;
    int early_stop_patience = 10;
    double val_fraction = 0.2;
    double noise_sigma = 0.02;
    double dropout = 0.1;
    int recycles = 3;
    std::uint64_t seed = 0;

    void validate() const;
    nlohmann::json to_json() const;
    /// Unknown keys throw ConfigError naming the key.
    static TrainConfig from_json(const nlohmann::json& j);
};

struct TrainExample {
    ProteinBackbone backbone;
    std::vector<int> secondary;  // empty: unknown
};

/// One metrics-log row. stage = 0 carries the summed staged loss; stages
/// 1..T carry their own mean cross-entropy.
struct LogRow {
    int epoch = 0;
    int step = 0;
    int stage = 0;
    std::string split;  // "train" or "val"
    double loss = 0.0;
    double ppl = 0.0;
    double recovery = 0.0;
    double lr = 0.0;
};

std::string log_csv_header();
std::string log_csv_row(const LogRow& row);

struct TrainResult {
    std::vector<LogRow> log;
    int steps = 0;
    int epochs = 0;
    bool early_stopped = false;
    double best_val_ppl = 0.0;
    std::vector<int> train_indices;
    std::vector<int> val_indices;
};

struct TrainHooks {
    std::function<void(const LogRow&)> on_log;
};

/**
 * Trains `model` in place. Each step re-featurizes noised backbones
 * (σ = noise_sigma), runs cascaded recycling with dropout, and takes one
 * AdamW step on the staged loss with global-norm clipping. Train metrics are
 * pooled from the training passes of each epoch; validation metrics come
 * from clean evaluation passes, which drive early stopping on PPL.
 * A non-finite loss throws TrainingDiverged carrying the step.
 */
template <typename T>
TrainResult train_model(model::RigaModel<T>& model, const std::vector<TrainExample>& corpus,
                        const FeatureConfig& features, const TrainConfig& cfg,
                        const model::EmbeddingProvider& structure_provider,
                        const model::EmbeddingProvider& sequence_provider, const TrainHooks& hooks = {});

/// Clean (noise-free, eval mode) final-stage metrics pooled over `indices`.
template <typename T>
std::vector<Metrics> evaluate_stages(const model::RigaModel<T>& model, const std::vector<TrainExample>& corpus,
                                     const std::vector<int>& indices, const FeatureConfig& features,
                                     const model::EmbeddingProvider& structure_provider,
                                     const model::EmbeddingProvider& sequence_provider, int recycles,
                                     double* staged = nullptr);

}  // namespace riga::train
