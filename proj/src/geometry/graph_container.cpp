#include "riga/geometry/graph_container.h"

#include "riga/common/error.h"

namespace riga {

nlohmann::json feature_config_to_json(const FeatureConfig& cfg) {
    return {{"k", cfg.k},
            {"rbf_count", cfg.rbf_count},
            {"rbf_min", cfg.rbf_min},
            {"rbf_max", cfg.rbf_max},
            {"relpos_clamp", cfg.relpos_clamp},
            {"intra_rbf", cfg.intra_rbf},
            {"dihedrals", cfg.dihedrals},
            {"secondary_structure", cfg.secondary_structure},
            {"atom_flags", cfg.atom_flags},
            {"inter_rbf", cfg.inter_rbf},
            {"orientation", cfg.orientation},
            {"relative_position", cfg.relative_position}};
}

FeatureConfig feature_config_from_json(const nlohmann::json& j) {
    FeatureConfig cfg;
    const auto known = feature_config_to_json(cfg);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!known.contains(it.key())) throw ConfigError("unknown feature config key '" + it.key() + "'");
    try {
        cfg.k = j.value("k", cfg.k);
        cfg.rbf_count = j.value("rbf_count", cfg.rbf_count);
        cfg.rbf_min = j.value("rbf_min", cfg.rbf_min);
        cfg.rbf_max = j.value("rbf_max", cfg.rbf_max);
        cfg.relpos_clamp = j.value("relpos_clamp", cfg.relpos_clamp);
        cfg.intra_rbf = j.value("intra_rbf", cfg.intra_rbf);
        cfg.dihedrals = j.value("dihedrals", cfg.dihedrals);
        cfg.secondary_structure = j.value("secondary_structure", cfg.secondary_structure);
        cfg.atom_flags = j.value("atom_flags", cfg.atom_flags);
        cfg.inter_rbf = j.value("inter_rbf", cfg.inter_rbf);
        cfg.orientation = j.value("orientation", cfg.orientation);
        cfg.relative_position = j.value("relative_position", cfg.relative_position);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad feature config value: ") + e.what());
    }
    try {
        cfg.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

namespace {

nlohmann::json families_to_json(const std::vector<FeatureFamily>& fams) {
    auto out = nlohmann::json::array();
    for (const auto& f : fams) out.push_back({{"name", f.name}, {"offset", f.offset}, {"width", f.width}});
    return out;
}

}  // namespace

Blob graph_to_blob(const FeaturizedGraph& fg) {
    const auto& g = fg.graph;
    Blob blob;
    blob.kind = "FEAT";
    blob.header = {{"format", "riga-features"},
                   {"n", g.n},
                   {"k", g.k},
                   {"node_dim", g.layout.node_dim},
                   {"edge_dim", g.layout.edge_dim},
                   {"feature_config", feature_config_to_json(fg.config)},
                   {"layout", {{"node", families_to_json(g.layout.node)}, {"edge", families_to_json(g.layout.edge)}}},
                   {"chain_id", fg.chain_id},
                   {"sequence", fg.sequence}};
    blob.blocks.push_back(make_int32_block("neighbors", {g.n, g.k}, g.neighbors));
    blob.blocks.push_back(make_float_block("node_feats", {g.n, g.layout.node_dim},
                                           std::span<const double>(g.node_feats.data(), g.node_feats.size())));
    blob.blocks.push_back(make_float_block("edge_feats", {g.edge_count(), g.layout.edge_dim},
                                           std::span<const double>(g.edge_feats.data(), g.edge_feats.size())));
    return blob;
}

FeaturizedGraph graph_from_blob(const Blob& blob) {
    FeaturizedGraph fg;
    try {
        fg.config = feature_config_from_json(blob.header.at("feature_config"));
        auto& g = fg.graph;
        g.n = blob.header.at("n").get<int>();
        g.k = blob.header.at("k").get<int>();
        g.layout = FeatureLayout::from_config(fg.config);
        if (g.layout.node_dim != blob.header.at("node_dim").get<int>() ||
            g.layout.edge_dim != blob.header.at("edge_dim").get<int>())
            throw ParseError("feature container dims disagree with its feature config");
        fg.chain_id = blob.header.value("chain_id", std::string());
        fg.sequence = blob.header.value("sequence", std::string());
        g.neighbors = blob.block("neighbors").to_int32();
        const auto nodes = blob.block("node_feats").to_doubles();
        const auto edges = blob.block("edge_feats").to_doubles();
        if (g.neighbors.size() != static_cast<std::size_t>(g.n * g.k) ||
            nodes.size() != static_cast<std::size_t>(g.n * g.layout.node_dim) ||
            edges.size() != static_cast<std::size_t>(g.edge_count() * g.layout.edge_dim))
            throw ParseError("feature container block sizes disagree with the header");
        g.node_feats = Eigen::Map<const RowMatrixXd>(nodes.data(), g.n, g.layout.node_dim);
        g.edge_feats = Eigen::Map<const RowMatrixXd>(edges.data(), g.edge_count(), g.layout.edge_dim);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed feature container header: ") + e.what());
    } catch (const ConfigError& e) {
        throw ParseError(e.what());
    }
    return fg;
}

}  // namespace riga
