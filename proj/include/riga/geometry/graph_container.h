#pragma once

#include <string>

#include <json.hpp>

#include "riga/common/blob.h"
#include "riga/geometry/features.h"

namespace riga {

/**
 * Featurized-graph container (kind "FEAT").
 *
 * Header: format, n, k, node_dim, edge_dim, feature_config, layout
 * ({node: [{name, offset, width}], edge: [...]}), plus optional chain_id and
 * sequence. Blocks: "neighbors" int32 [n, k]; "node_feats" float32 [n, node_dim];
 * "edge_feats" float32 [n*k, edge_dim], rows receiver-major.
 */
struct FeaturizedGraph {
    ResidueGraph graph;
    FeatureConfig config;
    std::string chain_id;
    std::string sequence;
};

nlohmann::json feature_config_to_json(const FeatureConfig& cfg);
FeatureConfig feature_config_from_json(const nlohmann::json& j);

Blob graph_to_blob(const FeaturizedGraph& fg);
FeaturizedGraph graph_from_blob(const Blob& blob);

}  // namespace riga
