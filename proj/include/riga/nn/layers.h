#pragma once

#include <string>
#include <utility>
#include <vector>

#include "riga/common/rng.h"
#include "riga/nn/ops.h"

namespace riga::nn {

enum class Activation { Gelu, Relu };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation act);

/// Training flag plus the dropout stream. Dropout is the identity whenever
/// `training` is false.
struct ForwardContext {
    bool training = false;
    CounterRng* rng = nullptr;
};

/// Ordered, named parameter registry; the checkpoint and optimizer iterate it.
template <typename T>
class ParamStore {
public:
    Tensor<T> create(const std::string& name, Matrix<T> init);
    /// Uniform in ±sqrt(6 / (fan_in + fan_out)).
    Tensor<T> xavier(const std::string& name, Eigen::Index fan_in, Eigen::Index fan_out, CounterRng& rng);
    Tensor<T> zeros(const std::string& name, Eigen::Index rows, Eigen::Index cols);
    Tensor<T> ones(const std::string& name, Eigen::Index rows, Eigen::Index cols);

    const std::vector<std::pair<std::string, Tensor<T>>>& entries() const { return entries_; }
    std::vector<Tensor<T>> tensors() const;
    const Tensor<T>* find(const std::string& name) const;
    std::size_t parameter_count() const;
    void zero_grad();

private:
    std::vector<std::pair<std::string, Tensor<T>>> entries_;
};

template <typename T>
struct Linear {
    Tensor<T> weight;  // in x out
    Tensor<T> bias;    // 1 x out, undefined when bias-free

    static Linear create(ParamStore<T>& store, const std::string& name, Eigen::Index in, Eigen::Index out,
                         CounterRng& rng, bool with_bias = true);
    Tensor<T> forward(const Tensor<T>& x) const;
};

template <typename T>
struct LayerNorm {
    Tensor<T> gamma;
    Tensor<T> beta;

    static LayerNorm create(ParamStore<T>& store, const std::string& name, Eigen::Index dim);
    Tensor<T> forward(const Tensor<T>& x) const { return layer_norm(x, gamma, beta); }
};

/// Linear layers separated by the activation; dropout on every hidden layer.
template <typename T>
struct Mlp {
    std::vector<Linear<T>> layers;
    Activation activation = Activation::Gelu;
    double dropout_rate = 0.0;

    static Mlp create(ParamStore<T>& store, const std::string& name, const std::vector<Eigen::Index>& widths,
                      Activation act, double dropout_rate, CounterRng& rng);
    Tensor<T> forward(const Tensor<T>& x, const ForwardContext& ctx) const;
    Tensor<T> activate(const Tensor<T>& x) const;
};

extern template class ParamStore<float>;
extern template class ParamStore<double>;
extern template struct Linear<float>;
extern template struct Linear<double>;
extern template struct LayerNorm<float>;
extern template struct LayerNorm<double>;
extern template struct Mlp<float>;
extern template struct Mlp<double>;

}  // namespace riga::nn
