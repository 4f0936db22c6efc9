#include "riga/cli/config.h"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "riga/common/error.h"
#include "riga/geometry/graph_container.h"

namespace riga::cli {

namespace {

// Re-throws a section parser's ConfigError with the section prefixed to the key.
template <typename F>
auto in_section(const std::string& section, F&& parse) {
    try {
        return parse();
    } catch (const ConfigError& e) {
        std::string msg = e.what();
        const auto pos = msg.find("key '");
        if (pos != std::string::npos) msg.insert(pos + 5, section + ".");
        throw ConfigError(msg);
    }
}

void check_precision(const std::string& p, const char* key) {
    if (p != "float32" && p != "float64")
        throw ConfigError(std::string("key '") + key + "' must be \"float32\" or \"float64\"");
}

}  // namespace

RunConfig RunConfig::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("run config must be a JSON object");
    RunConfig c;
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "seed") {
                if (!v.is_null()) c.seed = v.get<std::uint64_t>();
            } else if (key == "features") {
                c.features = in_section("features", [&] { return feature_config_from_json(v); });
            } else if (key == "model") {
                if (!v.is_object()) throw ConfigError("key 'model' must be an object");
                for (const char* derived : {"node_in", "edge_in"})
                    if (v.contains(derived))
                        throw ConfigError(std::string("key 'model.") + derived + "' is derived from the features section");
                c.model = in_section("model", [&] { return model::ModelConfig::from_json(v); });
            } else if (key == "training") {
                c.training = in_section("training", [&] { return train::TrainConfig::from_json(v); });
            } else if (key == "providers") {
                if (!v.is_object()) throw ConfigError("key 'providers' must be an object");
                for (const auto& [pk, pv] : v.items()) {
                    if (pk == "structure") c.providers.structure = pv.get<std::string>();
                    else if (pk == "sequence") c.providers.sequence = pv.get<std::string>();
                    else if (pk == "stub_seed") c.providers.stub_seed = pv.get<std::uint64_t>();
                    else throw ConfigError("unknown config key 'providers." + pk + "'");
                }
            } else if (key == "precision") {
                if (!v.is_object()) throw ConfigError("key 'precision' must be an object");
                for (const auto& [pk, pv] : v.items()) {
                    if (pk == "train") c.train_precision = pv.get<std::string>();
                    else if (pk == "infer") c.infer_precision = pv.get<std::string>();
                    else throw ConfigError("unknown config key 'precision." + pk + "'");
                }
            } else if (key == "recycles") {
                c.recycles = v.get<int>();
            } else {
                throw ConfigError("unknown config key '" + key + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    check_precision(c.train_precision, "precision.train");
    check_precision(c.infer_precision, "precision.infer");
    if (c.recycles < 1) throw ConfigError("key 'recycles' must be >= 1");
    if (std::abs(c.model.encoder.dropout - c.training.dropout) > 1e-12)
        throw ConfigError("key 'model.dropout' disagrees with 'training.dropout'");
    return c;
}

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    return from_json(j);
}

nlohmann::json RunConfig::to_json() const {
    nlohmann::json m = model.to_json();
    m.erase("node_in");
    m.erase("edge_in");
    nlohmann::json j = {{"features", feature_config_to_json(features)},
                        {"model", m},
                        {"training", training.to_json()},
                        {"providers",
                         {{"structure", providers.structure},
                          {"sequence", providers.sequence},
                          {"stub_seed", providers.stub_seed}}},
                        {"precision", {{"train", train_precision}, {"infer", infer_precision}}},
                        {"recycles", recycles}};
    if (seed) j["seed"] = *seed;
    return j;
}

model::ModelConfig RunConfig::resolved_model() const {
    model::ModelConfig m = model;
    const FeatureLayout layout = FeatureLayout::from_config(features);
    m.node_in = layout.node_dim;
    m.edge_in = layout.edge_dim;
    return m;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, const RunConfig& cfg) {
    if (flag) return *flag;
    if (cfg.seed) return *cfg.seed;
    if (const char* env = std::getenv("RIGA_SEED"); env && *env) {
        std::istringstream in(env);
        std::uint64_t v = 0;
        if (!(in >> v) || !in.eof()) throw ConfigError(std::string("RIGA_SEED is not an unsigned integer: '") + env + "'");
        return v;
    }
    return 0;
}

}  // namespace riga::cli
