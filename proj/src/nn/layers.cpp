#include "riga/nn/layers.h"

#include <cmath>

#include "riga/common/error.h"

namespace riga::nn {

Activation activation_from_string(const std::string& name) {
    if (name == "gelu") return Activation::Gelu;
    if (name == "relu") return Activation::Relu;
    throw ConfigError("unknown activation '" + name + "' (expected gelu or relu)");
}

std::string to_string(Activation act) { return act == Activation::Gelu ? "gelu" : "relu"; }

template <typename T>
Tensor<T> ParamStore<T>::create(const std::string& name, Matrix<T> init) {
    if (find(name)) throw InvalidParameter("duplicate parameter name '" + name + "'");
    Tensor<T> t(std::move(init), true);
    entries_.emplace_back(name, t);
    return t;
}

template <typename T>
Tensor<T> ParamStore<T>::xavier(const std::string& name, Eigen::Index fan_in, Eigen::Index fan_out, CounterRng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix<T> w(fan_in, fan_out);
    for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(rng.uniform(-bound, bound));
    return create(name, std::move(w));
}

template <typename T>
Tensor<T> ParamStore<T>::zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    return create(name, Matrix<T>::Zero(rows, cols));
}

template <typename T>
Tensor<T> ParamStore<T>::ones(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
    return create(name, Matrix<T>::Ones(rows, cols));
}

template <typename T>
std::vector<Tensor<T>> ParamStore<T>::tensors() const {
    std::vector<Tensor<T>> out;
    out.reserve(entries_.size());
    for (const auto& [_, t] : entries_) out.push_back(t);
    return out;
}

template <typename T>
const Tensor<T>* ParamStore<T>::find(const std::string& name) const {
    for (const auto& [n, t] : entries_)
        if (n == name) return &t;
    return nullptr;
}

template <typename T>
std::size_t ParamStore<T>::parameter_count() const {
    std::size_t total = 0;
    for (const auto& [_, t] : entries_) total += static_cast<std::size_t>(t.size());
    return total;
}

template <typename T>
void ParamStore<T>::zero_grad() {
    for (auto& [_, t] : entries_) t.zero_grad();
}

template <typename T>
Linear<T> Linear<T>::create(ParamStore<T>& store, const std::string& name, Eigen::Index in, Eigen::Index out,
                            CounterRng& rng, bool with_bias) {
    Linear lin;
    lin.weight = store.xavier(name + ".weight", in, out, rng);
    if (with_bias) lin.bias = store.zeros(name + ".bias", 1, out);
    return lin;
}

template <typename T>
Tensor<T> Linear<T>::forward(const Tensor<T>& x) const {
    Tensor<T> y = matmul(x, weight);
    return bias.defined() ? add_bias(y, bias) : y;
}

template <typename T>
LayerNorm<T> LayerNorm<T>::create(ParamStore<T>& store, const std::string& name, Eigen::Index dim) {
    return {store.ones(name + ".gamma", 1, dim), store.zeros(name + ".beta", 1, dim)};
}

template <typename T>
Mlp<T> Mlp<T>::create(ParamStore<T>& store, const std::string& name, const std::vector<Eigen::Index>& widths,
                      Activation act, double dropout_rate, CounterRng& rng) {
    if (widths.size() < 2) throw InvalidParameter("MLP needs at least input and output widths");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw InvalidParameter("dropout rate must be in [0, 1)");
    Mlp mlp;
    mlp.activation = act;
    mlp.dropout_rate = dropout_rate;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        mlp.layers.push_back(Linear<T>::create(store, name + "." + std::to_string(l), widths[l], widths[l + 1], rng));
    return mlp;
}

template <typename T>
Tensor<T> Mlp<T>::activate(const Tensor<T>& x) const {
    return activation == Activation::Gelu ? gelu(x) : relu(x);
}

template <typename T>
Tensor<T> Mlp<T>::forward(const Tensor<T>& x, const ForwardContext& ctx) const {
    Tensor<T> h = x;
    for (std::size_t l = 0; l < layers.size(); ++l) {
        h = layers[l].forward(h);
        if (l + 1 < layers.size()) h = dropout(activate(h), dropout_rate, ctx.rng, ctx.training);
    }
    return h;
}

template class ParamStore<float>;
template class ParamStore<double>;
template struct Linear<float>;
template struct Linear<double>;
template struct LayerNorm<float>;
template struct LayerNorm<double>;
template struct Mlp<float>;
template struct Mlp<double>;

}  // namespace riga::nn
