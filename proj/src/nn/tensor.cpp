#include "riga/nn/tensor.h"

#include <unordered_set>

#include "riga/common/error.h"

namespace riga::nn {

namespace {

thread_local bool t_grad_enabled = true;
#ifdef NDEBUG
thread_local bool t_check_finite = false;
#else
thread_local bool t_check_finite = true;
#endif

}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

void set_check_finite(bool enabled) { t_check_finite = enabled; }
bool check_finite_enabled() { return t_check_finite; }

template <typename T>
Tensor<T>::Tensor(Matrix<T> value, bool requires_grad) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
    node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T> Tensor<T>::zeros(Eigen::Index rows, Eigen::Index cols, bool requires_grad) {
    return Tensor(Matrix<T>::Zero(rows, cols), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
    Matrix<T> m(1, 1);
    m(0, 0) = value;
    return Tensor(std::move(m), requires_grad);
}

template <typename T>
Matrix<T> Tensor<T>::grad() const {
    if (node_->grad.size() == 0) return Matrix<T>::Zero(rows(), cols());
    return node_->grad;
}

template <typename T>
T Tensor<T>::item() const {
    if (size() != 1) throw ShapeError("item() on a tensor with " + std::to_string(size()) + " elements");
    return node_->value(0, 0);
}

template <typename T>
void Tensor<T>::zero_grad() {
    node_->grad.resize(0, 0);
}

template <typename T>
void Tensor<T>::backward() {
    if (!node_) throw InvalidBackward("backward on an undefined tensor");
    if (size() != 1) throw InvalidBackward("backward needs a scalar root, got " + std::to_string(rows()) + "x" +
                                           std::to_string(cols()));
    if (node_->backward_done) throw InvalidBackward("backward already ran on this root; rebuild the graph first");
    node_->backward_done = true;
    if (!node_->requires_grad) return;

    // Iterative post-order DFS gives a topological order.
    std::vector<Node<T>*> order;
    std::unordered_set<Node<T>*> seen;
    std::vector<std::pair<Node<T>*, std::size_t>> stack{{node_.get(), 0}};
    seen.insert(node_.get());
    while (!stack.empty()) {
        auto& [n, next] = stack.back();
        if (next < n->parents.size()) {
            Node<T>* p = n->parents[next++].get();
            if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
        } else {
            order.push_back(n);
            stack.pop_back();
        }
    }
    node_->grad_ref().array() += T(1);
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Node<T>* n = *it;
        if (n->backward_fn && n->grad.size() != 0) n->backward_fn(*n);
    }
}

template class Tensor<float>;
template class Tensor<double>;

}  // namespace riga::nn
