#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <json.hpp>

#include "riga/geometry/features.h"
#include "riga/model/riga_model.h"
#include "riga/train/training.h"

namespace riga::cli {

struct ProviderConfig {
    std::string structure = "stub";  // "stub" or a path
    std::string sequence = "stub";
    std::uint64_t stub_seed = 0x5eed;
};

/**
 * Everything a run needs, read from one JSON file:
 *   {"seed", "features": {...}, "model": {...}, "training": {...},
 *    "providers": {"structure", "sequence", "stub_seed"},
 *    "precision": {"train", "infer"}, "recycles"}
 * Sections may be partial; missing keys keep their defaults. Unknown keys
 * throw ConfigError naming the full key path.
 */
struct RunConfig {
    std::optional<std::uint64_t> seed;
    FeatureConfig features;
    model::ModelConfig model;
    train::TrainConfig training;
    ProviderConfig providers;
    std::string train_precision = "float32";
    std::string infer_precision = "float32";
    int recycles = 3;

    static RunConfig from_json(const nlohmann::json& j);
    static RunConfig load(const std::string& path);
    nlohmann::json to_json() const;
    /// Model config with feature widths taken from the feature layout.
    model::ModelConfig resolved_model() const;
};

/// --seed, else the config seed, else RIGA_SEED, else 0. A malformed
/// RIGA_SEED throws ConfigError.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const RunConfig& cfg);

}  // namespace riga::cli
