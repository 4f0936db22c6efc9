#include "riga/nn/checkpoint.h"

#include "riga/common/error.h"

namespace riga::nn {

template <typename T>
Blob params_to_blob(const ParamStore<T>& store, const CounterRng& rng, const nlohmann::json& extra, bool float64) {
    Blob blob;
    blob.kind = "CKPT";
    blob.header = extra.is_object() ? extra : nlohmann::json::object();
    blob.header["format"] = "riga-checkpoint";
    blob.header["dtype"] = float64 ? "float64" : "float32";
    blob.header["rng"] = {{"algorithm", std::string(CounterRng::kName)},
                          {"seed", rng.seed()},
                          {"counter", rng.counter()}};
    auto params = nlohmann::json::array();
    for (const auto& [name, t] : store.entries()) {
        params.push_back({{"name", name}, {"shape", {t.rows(), t.cols()}}});
        const Matrix<double> v = t.value().template cast<double>();
        blob.blocks.push_back(make_float_block(name, {t.rows(), t.cols()},
                                               std::span<const double>(v.data(), v.size()), float64));
    }
    blob.header["params"] = params;
    return blob;
}

template <typename T>
void load_params(ParamStore<T>& store, const Blob& blob) {
    for (const auto& [name, t] : store.entries()) {
        if (!blob.has_block(name)) throw ShapeError("checkpoint lacks parameter '" + name + "'");
        const BlobBlock& b = blob.block(name);
        if (b.shape.size() != 2 || b.shape[0] != t.rows() || b.shape[1] != t.cols())
            throw ShapeError("checkpoint parameter '" + name + "' has the wrong shape");
        const auto values = b.to_doubles();
        Tensor<T> handle = t;
        handle.mutable_value() =
            Eigen::Map<const Matrix<double>>(values.data(), t.rows(), t.cols()).template cast<T>();
    }
}

CounterRng rng_from_checkpoint(const Blob& blob) {
    if (!blob.header.contains("rng")) return CounterRng();
    const auto& r = blob.header["rng"];
    return CounterRng(r.at("seed").get<std::uint64_t>(), r.at("counter").get<std::uint64_t>());
}

template Blob params_to_blob(const ParamStore<float>&, const CounterRng&, const nlohmann::json&, bool);
template Blob params_to_blob(const ParamStore<double>&, const CounterRng&, const nlohmann::json&, bool);
template void load_params(ParamStore<float>&, const Blob&);
template void load_params(ParamStore<double>&, const Blob&);

}  // namespace riga::nn
