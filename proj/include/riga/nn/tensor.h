#pragma once

#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Core>

namespace riga::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct Node {
    Matrix<T> value;
    Matrix<T> grad;  // allocated on first accumulation
    bool requires_grad = false;
    bool backward_done = false;
    std::vector<std::shared_ptr<Node>> parents;
    std::function<void(Node&)> backward_fn;

    Matrix<T>& grad_ref() {
        if (grad.size() == 0) grad = Matrix<T>::Zero(value.rows(), value.cols());
        return grad;
    }
};

/**
 * 2-D tensor handle with reverse-mode differentiation.
 *
 * Copies share the underlying node. Leaves created with requires_grad are
 * parameters: their gradients accumulate across backward() calls until
 * zero_grad(). Every op records a backward closure when any input requires
 * a gradient and no NoGradGuard is active.
 */
template <typename T>
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Matrix<T> value, bool requires_grad = false);

    static Tensor zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad = false);
    static Tensor scalar(T value, bool requires_grad = false);

    bool defined() const { return node_ != nullptr; }
    Eigen::Index rows() const { return node_->value.rows(); }
    Eigen::Index cols() const { return node_->value.cols(); }
    Eigen::Index size() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    const Matrix<T>& value() const { return node_->value; }
    /// Only for leaves (parameter updates, checkpoint loading).
    Matrix<T>& mutable_value() { return node_->value; }
    /// Gradient, or zeros when nothing has been accumulated.
    Matrix<T> grad() const;
    bool has_grad() const { return node_->grad.size() != 0; }
    T item() const;

    /// Reverse pass from a 1x1 tensor. Throws InvalidBackward for non-scalar
    /// roots and for a second call on the same root.
    void backward();
    void zero_grad();
    /// Constant tensor sharing no graph with this one.
    Tensor detach() const { return Tensor(node_->value, false); }

    const std::shared_ptr<Node<T>>& node() const { return node_; }
    explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

private:
    std::shared_ptr<Node<T>> node_;
};

/// Disables graph recording on this thread while alive.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

bool grad_enabled();

/// When on, every op checks its output for NaN/Inf and throws NumericError.
/// Defaults to on in debug builds and off with NDEBUG.
void set_check_finite(bool enabled);
bool check_finite_enabled();

extern template class Tensor<float>;
extern template class Tensor<double>;

}  // namespace riga::nn
