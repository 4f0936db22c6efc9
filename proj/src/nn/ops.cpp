#include "riga/nn/ops.h"

#include <cmath>
#include <numbers>

#include "riga/common/error.h"

namespace riga::nn {

namespace {

template <typename T>
using BackwardFn = std::function<void(Node<T>&)>;

template <typename T>
Tensor<T> record(Matrix<T> value, std::initializer_list<const Tensor<T>*> inputs, BackwardFn<T> fn) {
    if (check_finite_enabled() && !value.allFinite()) throw NumericError("op produced a non-finite value");
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    bool needs = false;
    if (grad_enabled())
        for (const auto* in : inputs) needs = needs || in->requires_grad();
    if (needs) {
        node->requires_grad = true;
        for (const auto* in : inputs) node->parents.push_back(in->node());
        node->backward_fn = std::move(fn);
    }
    return Tensor<T>(std::move(node));
}

template <typename T>
Tensor<T> record_many(Matrix<T> value, const std::vector<Tensor<T>>& inputs, BackwardFn<T> fn) {
    if (check_finite_enabled() && !value.allFinite()) throw NumericError("op produced a non-finite value");
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    bool needs = false;
    if (grad_enabled())
        for (const auto& in : inputs) needs = needs || in.requires_grad();
    if (needs) {
        node->requires_grad = true;
        for (const auto& in : inputs) node->parents.push_back(in.node());
        node->backward_fn = std::move(fn);
    }
    return Tensor<T>(std::move(node));
}

// First accumulation assigns instead of adding into a zero-filled buffer.
template <typename T, typename Expr>
void accumulate(Node<T>& target, const Expr& expr) {
    if (target.grad.size() == 0) target.grad = expr;
    else target.grad += expr;
}

template <typename T, typename A, typename B>
void accumulate_product(Node<T>& target, const A& a, const B& b) {
    if (target.grad.size() == 0) target.grad.noalias() = a * b;
    else target.grad.noalias() += a * b;
}

template <typename T>
bool wants(const Node<T>& self, std::size_t k) {
    return self.parents[k]->requires_grad;
}

inline void require(bool ok, const char* msg) {
    if (!ok) throw ShapeError(msg);
}

template <typename T>
void same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
}

}  // namespace

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.cols() != b.rows())
        throw ShapeError("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                         std::to_string(b.rows()) + ")");
    Matrix<T> out = a.value() * b.value();
    return record<T>(std::move(out), {&a, &b}, [](Node<T>& self) {
        const auto& A = self.parents[0]->value;
        const auto& B = self.parents[1]->value;
        if (wants(self, 0)) accumulate_product(*self.parents[0], self.grad, B.transpose());
        if (wants(self, 1)) accumulate_product(*self.parents[1], A.transpose(), self.grad);
    });
}

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    same_shape(a, b, "add");
    return record<T>(a.value() + b.value(), {&a, &b}, [](Node<T>& self) {
        if (wants(self, 0)) accumulate(*self.parents[0], self.grad);
        if (wants(self, 1)) accumulate(*self.parents[1], self.grad);
    });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    same_shape(a, b, "sub");
    return record<T>(a.value() - b.value(), {&a, &b}, [](Node<T>& self) {
        if (wants(self, 0)) self.parents[0]->grad_ref() += self.grad;
        if (wants(self, 1)) self.parents[1]->grad_ref() -= self.grad;
    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    same_shape(a, b, "mul");
    return record<T>(a.value().cwiseProduct(b.value()), {&a, &b}, [](Node<T>& self) {
        if (wants(self, 0)) accumulate(*self.parents[0], self.grad.cwiseProduct(self.parents[1]->value));
        if (wants(self, 1)) accumulate(*self.parents[1], self.grad.cwiseProduct(self.parents[0]->value));
    });
}

template <typename T>
Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& bias) {
    require(bias.rows() == 1 && bias.cols() == a.cols(), "add_bias: bias must be 1 x cols");
    Matrix<T> out = a.value();
    out.rowwise() += bias.value().row(0);
    return record<T>(std::move(out), {&a, &bias}, [](Node<T>& self) {
        if (wants(self, 0)) accumulate(*self.parents[0], self.grad);
        if (wants(self, 1)) self.parents[1]->grad_ref() += self.grad.colwise().sum();
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T factor) {
    return record<T>(a.value() * factor, {&a}, [factor](Node<T>& self) {
        if (wants(self, 0)) accumulate(*self.parents[0], self.grad * factor);
    });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    Matrix<T> out = a.value().unaryExpr([](T x) {
        // Branches keep exp() from overflowing for large |x|.
        if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
        const T ex = std::exp(x);
        return ex / (T(1) + ex);
    });
    return record<T>(std::move(out), {&a}, [](Node<T>& self) {
        if (!wants(self, 0)) return;
        const auto& y = self.value;
        accumulate(*self.parents[0], (self.grad.array() * y.array() * (T(1) - y.array())).matrix());
    });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
    const T inv_sqrt2 = T(1) / std::sqrt(T(2));
    auto cdf = std::make_shared<Matrix<T>>(
        a.value().unaryExpr([inv_sqrt2](T x) { return T(0.5) * (T(1) + std::erf(x * inv_sqrt2)); }));
    Matrix<T> out = a.value().cwiseProduct(*cdf);
    return record<T>(std::move(out), {&a}, [cdf](Node<T>& self) {
        if (!wants(self, 0)) return;
        const T inv_sqrt2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
        const auto& x = self.parents[0]->value;
        const auto pdf = (x.array().square() * T(-0.5)).exp() * inv_sqrt2pi;
        accumulate(*self.parents[0], (self.grad.array() * (cdf->array() + x.array() * pdf)).matrix());
    });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    return record<T>(a.value().cwiseMax(T(0)), {&a}, [](Node<T>& self) {
        if (!wants(self, 0)) return;
        const auto& x = self.parents[0]->value;
        self.parents[0]->grad_ref().array() += (x.array() > T(0)).select(self.grad.array(), T(0));
    });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& a, const Tensor<T>& gamma, const Tensor<T>& beta, T eps) {
    const Eigen::Index rows = a.rows();
    const Eigen::Index cols = a.cols();
    require(gamma.rows() == 1 && gamma.cols() == cols && beta.rows() == 1 && beta.cols() == cols,
            "layer_norm: gamma/beta must be 1 x cols");
    auto xhat = std::make_shared<Matrix<T>>(rows, cols);
    auto inv_std = std::make_shared<Eigen::Matrix<T, Eigen::Dynamic, 1>>(rows);
    const auto& x = a.value();
    for (Eigen::Index r = 0; r < rows; ++r) {
        const T mean = x.row(r).mean();
        const T var = (x.row(r).array() - mean).square().mean();
        const T is = T(1) / std::sqrt(var + eps);
        (*inv_std)(r) = is;
        xhat->row(r) = (x.row(r).array() - mean) * is;
    }
    Matrix<T> out = xhat->array().rowwise() * gamma.value().row(0).array();
    out.rowwise() += beta.value().row(0);
    return record<T>(std::move(out), {&a, &gamma, &beta}, [xhat, inv_std](Node<T>& self) {
        const auto& g = self.grad;
        const auto& gm = self.parents[1]->value;
        if (wants(self, 1)) self.parents[1]->grad_ref() += g.cwiseProduct(*xhat).colwise().sum();
        if (wants(self, 2)) self.parents[2]->grad_ref() += g.colwise().sum();
        if (wants(self, 0)) {
            auto& ga = self.parents[0]->grad_ref();
            const T inv_c = T(1) / static_cast<T>(g.cols());
            for (Eigen::Index r = 0; r < g.rows(); ++r) {
                const auto dxhat = (g.row(r).array() * gm.row(0).array()).eval();
                const T m1 = dxhat.sum() * inv_c;
                const T m2 = (dxhat * xhat->row(r).array()).sum() * inv_c;
                ga.row(r).array() += (*inv_std)(r) * (dxhat - m1 - xhat->row(r).array() * m2);
            }
        }
    });
}

template <typename T>
Tensor<T> dropout(const Tensor<T>& a, double p, CounterRng* rng, bool training) {
    if (!training || p <= 0.0) return a;
    if (p >= 1.0) throw InvalidParameter("dropout rate must be < 1");
    if (rng == nullptr) throw InvalidParameter("dropout in training mode needs an RNG");
    auto mask = std::make_shared<Matrix<T>>(a.rows(), a.cols());
    const T keep_scale = T(1.0 / (1.0 - p));
    for (Eigen::Index i = 0; i < mask->size(); ++i) mask->data()[i] = rng->uniform() < p ? T(0) : keep_scale;
    return record<T>(a.value().cwiseProduct(*mask), {&a}, [mask](Node<T>& self) {
        if (wants(self, 0)) accumulate(*self.parents[0], self.grad.cwiseProduct(*mask));
    });
}

template <typename T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
    require(!parts.empty(), "concat_cols: no inputs");
    const Eigen::Index rows = parts.front().rows();
    Eigen::Index cols = 0;
    for (const auto& p : parts) {
        require(p.rows() == rows, "concat_cols: row counts differ");
        cols += p.cols();
    }
    Matrix<T> out(rows, cols);
    Eigen::Index offset = 0;
    for (const auto& p : parts) {
        out.middleCols(offset, p.cols()) = p.value();
        offset += p.cols();
    }
    return record_many<T>(std::move(out), parts, [](Node<T>& self) {
        Eigen::Index off = 0;
        for (auto& p : self.parents) {
            const Eigen::Index c = p->value.cols();
            if (p->requires_grad) p->grad_ref() += self.grad.middleCols(off, c);
            off += c;
        }
    });
}

template <typename T>
Tensor<T> slice_rows(const Tensor<T>& a, Eigen::Index start, Eigen::Index count) {
    require(start >= 0 && count >= 0 && start + count <= a.rows(), "slice_rows: range out of bounds");
    return record<T>(a.value().middleRows(start, count), {&a}, [start, count](Node<T>& self) {
        if (wants(self, 0)) self.parents[0]->grad_ref().middleRows(start, count) += self.grad;
    });
}

template <typename T>
Tensor<T> slice_cols(const Tensor<T>& a, Eigen::Index start, Eigen::Index count) {
    require(start >= 0 && count >= 0 && start + count <= a.cols(), "slice_cols: range out of bounds");
    return record<T>(a.value().middleCols(start, count), {&a}, [start, count](Node<T>& self) {
        if (wants(self, 0)) self.parents[0]->grad_ref().middleCols(start, count) += self.grad;
    });
}

template <typename T>
Tensor<T> gather_rows(const Tensor<T>& a, const Index& idx) {
    const auto& ix = *idx;
    Matrix<T> out(static_cast<Eigen::Index>(ix.size()), a.cols());
    for (std::size_t r = 0; r < ix.size(); ++r) {
        require(ix[r] >= 0 && ix[r] < a.rows(), "gather_rows: index out of range");
        out.row(static_cast<Eigen::Index>(r)) = a.value().row(ix[r]);
    }
    return record<T>(std::move(out), {&a}, [idx](Node<T>& self) {
        if (!wants(self, 0)) return;
        auto& g = self.parents[0]->grad_ref();
        const auto& ix = *idx;
        for (std::size_t r = 0; r < ix.size(); ++r) g.row(ix[r]) += self.grad.row(static_cast<Eigen::Index>(r));
    });
}

template <typename T>
Tensor<T> scatter_add_rows(const Tensor<T>& a, const Index& idx, Eigen::Index out_rows) {
    const auto& ix = *idx;
    require(static_cast<Eigen::Index>(ix.size()) == a.rows(), "scatter_add_rows: index length must equal rows");
    Matrix<T> out = Matrix<T>::Zero(out_rows, a.cols());
    for (std::size_t r = 0; r < ix.size(); ++r) {
        require(ix[r] >= 0 && ix[r] < out_rows, "scatter_add_rows: index out of range");
        out.row(ix[r]) += a.value().row(static_cast<Eigen::Index>(r));
    }
    return record<T>(std::move(out), {&a}, [idx](Node<T>& self) {
        if (!wants(self, 0)) return;
        auto& g = self.parents[0]->grad_ref();
        const auto& ix = *idx;
        for (std::size_t r = 0; r < ix.size(); ++r) g.row(static_cast<Eigen::Index>(r)) += self.grad.row(ix[r]);
    });
}

template <typename T>
Tensor<T> pair_average_rows(const Tensor<T>& a, const Index& partner) {
    const auto& px = *partner;
    require(static_cast<Eigen::Index>(px.size()) == a.rows(), "pair_average_rows: partner length must equal rows");
    Matrix<T> out = a.value();
    for (std::size_t r = 0; r < px.size(); ++r)
        if (px[r] >= 0)
            out.row(static_cast<Eigen::Index>(r)) =
                T(0.5) * (a.value().row(static_cast<Eigen::Index>(r)) + a.value().row(px[r]));
    return record<T>(std::move(out), {&a}, [partner](Node<T>& self) {
        if (!wants(self, 0)) return;
        auto& g = self.parents[0]->grad_ref();
        const auto& px = *partner;
        for (std::size_t r = 0; r < px.size(); ++r) {
            const auto row = self.grad.row(static_cast<Eigen::Index>(r));
            if (px[r] >= 0) {
                g.row(static_cast<Eigen::Index>(r)) += T(0.5) * row;
                g.row(px[r]) += T(0.5) * row;
            } else {
                g.row(static_cast<Eigen::Index>(r)) += row;
            }
        }
    });
}

template <typename T>
Tensor<T> head_dot(const Tensor<T>& q, const Tensor<T>& k, int heads, T scale_factor) {
    same_shape(q, k, "head_dot");
    require(heads >= 1 && q.cols() % heads == 0, "head_dot: columns not divisible by heads");
    const Eigen::Index dk = q.cols() / heads;
    const Eigen::Index rows = q.rows();
    Matrix<T> out(rows, heads);
    for (Eigen::Index e = 0; e < rows; ++e)
        for (int h = 0; h < heads; ++h)
            out(e, h) = scale_factor * q.value().row(e).segment(h * dk, dk).dot(k.value().row(e).segment(h * dk, dk));
    return record<T>(std::move(out), {&q, &k}, [heads, dk, scale_factor](Node<T>& self) {
        const auto& Q = self.parents[0]->value;
        const auto& K = self.parents[1]->value;
        const bool wq = wants(self, 0);
        const bool wk = wants(self, 1);
        Matrix<T>* gq = wq ? &self.parents[0]->grad_ref() : nullptr;
        Matrix<T>* gk = wk ? &self.parents[1]->grad_ref() : nullptr;
        for (Eigen::Index e = 0; e < Q.rows(); ++e)
            for (int h = 0; h < heads; ++h) {
                const T g = scale_factor * self.grad(e, h);
                if (wq) gq->row(e).segment(h * dk, dk) += g * K.row(e).segment(h * dk, dk);
                if (wk) gk->row(e).segment(h * dk, dk) += g * Q.row(e).segment(h * dk, dk);
            }
    });
}

template <typename T>
Tensor<T> segment_softmax(const Tensor<T>& scores, int segment) {
    require(segment >= 1 && scores.rows() % segment == 0, "segment_softmax: rows not divisible by segment");
    const Eigen::Index groups = scores.rows() / segment;
    Matrix<T> out(scores.rows(), scores.cols());
    for (Eigen::Index g = 0; g < groups; ++g) {
        auto block = scores.value().middleRows(g * segment, segment);
        auto dst = out.middleRows(g * segment, segment);
        for (Eigen::Index c = 0; c < scores.cols(); ++c) {
            const T m = block.col(c).maxCoeff();
            dst.col(c) = (block.col(c).array() - m).exp();
            dst.col(c) /= dst.col(c).sum();
        }
    }
    return record<T>(std::move(out), {&scores}, [segment](Node<T>& self) {
        if (!wants(self, 0)) return;
        auto& gs = self.parents[0]->grad_ref();
        const auto& y = self.value;
        const Eigen::Index groups = y.rows() / segment;
        for (Eigen::Index g = 0; g < groups; ++g) {
            auto yb = y.middleRows(g * segment, segment);
            auto gb = self.grad.middleRows(g * segment, segment);
            const auto dot = (yb.array() * gb.array()).colwise().sum().eval();
            gs.middleRows(g * segment, segment).array() +=
                yb.array() * (gb.array().rowwise() - dot);
        }
    });
}

template <typename T>
Tensor<T> segment_weighted_sum(const Tensor<T>& alpha, const Tensor<T>& v, int segment) {
    require(alpha.rows() == v.rows(), "segment_weighted_sum: alpha and values must have equal rows");
    require(segment >= 1 && v.rows() % segment == 0, "segment_weighted_sum: rows not divisible by segment");
    const int heads = static_cast<int>(alpha.cols());
    require(heads >= 1 && v.cols() % heads == 0, "segment_weighted_sum: value width not divisible by heads");
    const Eigen::Index dk = v.cols() / heads;
    const Eigen::Index groups = v.rows() / segment;
    Matrix<T> out = Matrix<T>::Zero(groups, v.cols());
    for (Eigen::Index i = 0; i < groups; ++i)
        for (int s = 0; s < segment; ++s) {
            const Eigen::Index e = i * segment + s;
            for (int h = 0; h < heads; ++h)
                out.row(i).segment(h * dk, dk) += alpha.value()(e, h) * v.value().row(e).segment(h * dk, dk);
        }
    return record<T>(std::move(out), {&alpha, &v}, [segment, heads, dk](Node<T>& self) {
        const auto& A = self.parents[0]->value;
        const auto& V = self.parents[1]->value;
        const bool wa = wants(self, 0);
        const bool wv = wants(self, 1);
        Matrix<T>* ga = wa ? &self.parents[0]->grad_ref() : nullptr;
        Matrix<T>* gv = wv ? &self.parents[1]->grad_ref() : nullptr;
        for (Eigen::Index i = 0; i < self.value.rows(); ++i)
            for (int s = 0; s < segment; ++s) {
                const Eigen::Index e = i * segment + s;
                for (int h = 0; h < heads; ++h) {
                    const auto go = self.grad.row(i).segment(h * dk, dk);
                    if (wa) (*ga)(e, h) += go.dot(V.row(e).segment(h * dk, dk));
                    if (wv) gv->row(e).segment(h * dk, dk) += A(e, h) * go;
                }
            }
    });
}

template <typename T>
Tensor<T> column_softmax(const Tensor<T>& a) {
    Matrix<T> out(a.rows(), a.cols());
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const T m = a.value().col(c).maxCoeff();
        out.col(c) = (a.value().col(c).array() - m).exp();
        out.col(c) /= out.col(c).sum();
    }
    return record<T>(std::move(out), {&a}, [](Node<T>& self) {
        if (!wants(self, 0)) return;
        const auto& y = self.value;
        const auto dot = (y.array() * self.grad.array()).colwise().sum().eval();
        accumulate(*self.parents[0], (y.array() * (self.grad.array().rowwise() - dot)).matrix());
    });
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& a) {
    Matrix<T> out(a.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
        const T m = a.value().row(r).maxCoeff();
        out.row(r) = (a.value().row(r).array() - m).exp();
        out.row(r) /= out.row(r).sum();
    }
    return record<T>(std::move(out), {&a}, [](Node<T>& self) {
        if (!wants(self, 0)) return;
        const auto& y = self.value;
        const auto dot = (y.array() * self.grad.array()).rowwise().sum().eval();
        accumulate(*self.parents[0], (y.array() * (self.grad.array().colwise() - dot)).matrix());
    });
}

template <typename T>
Tensor<T> sum_rows(const Tensor<T>& a) {
    return record<T>(a.value().colwise().sum(), {&a}, [](Node<T>& self) {
        if (wants(self, 0)) self.parents[0]->grad_ref().rowwise() += self.grad.row(0);
    });
}

template <typename T>
Tensor<T> broadcast_rows(const Tensor<T>& a, Eigen::Index rows) {
    require(a.rows() == 1, "broadcast_rows: input must have one row");
    return record<T>(a.value().replicate(rows, 1), {&a}, [](Node<T>& self) {
        if (wants(self, 0)) self.parents[0]->grad_ref() += self.grad.colwise().sum();
    });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    Matrix<T> out(1, 1);
    out(0, 0) = a.value().sum();
    return record<T>(std::move(out), {&a}, [](Node<T>& self) {
        if (wants(self, 0)) self.parents[0]->grad_ref().array() += self.grad(0, 0);
    });
}

template <typename T>
Tensor<T> cross_entropy_sum(const Tensor<T>& logits, std::span<const int> targets, std::span<const std::uint8_t> mask) {
    const Eigen::Index rows = logits.rows();
    require(static_cast<Eigen::Index>(targets.size()) == rows && static_cast<Eigen::Index>(mask.size()) == rows,
            "cross_entropy_sum: targets/mask length must equal rows");
    auto probs = std::make_shared<Matrix<T>>(rows, logits.cols());
    auto tgt = std::make_shared<std::vector<int>>(targets.begin(), targets.end());
    auto msk = std::make_shared<std::vector<std::uint8_t>>(mask.begin(), mask.end());
    T total = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto z = logits.value().row(r);
        const T m = z.maxCoeff();
        const T lse = m + std::log((z.array() - m).exp().sum());
        probs->row(r) = (z.array() - lse).exp();
        if (mask[static_cast<std::size_t>(r)]) {
            const int t = targets[static_cast<std::size_t>(r)];
            require(t >= 0 && t < logits.cols(), "cross_entropy_sum: target class out of range");
            total += lse - z(t);
        }
    }
    Matrix<T> out(1, 1);
    out(0, 0) = total;
    return record<T>(std::move(out), {&logits}, [probs, tgt, msk](Node<T>& self) {
        if (!wants(self, 0)) return;
        auto& g = self.parents[0]->grad_ref();
        const T go = self.grad(0, 0);
        for (Eigen::Index r = 0; r < probs->rows(); ++r) {
            if (!(*msk)[static_cast<std::size_t>(r)]) continue;
            g.row(r) += go * probs->row(r);
            g(r, (*tgt)[static_cast<std::size_t>(r)]) -= go;
        }
    });
}

template <typename T>
std::vector<T> softmax(std::span<const T> x) {
    if (x.empty()) return {};
    T m = x[0];
    for (T v : x) {
        if (!std::isfinite(v)) throw NumericError("softmax input is not finite");
        m = std::max(m, v);
    }
    std::vector<T> out(x.size());
    T total = 0;
    for (std::size_t i = 0; i < x.size(); ++i) total += (out[i] = std::exp(x[i] - m));
    for (auto& v : out) v /= total;
    return out;
}

#define RIGA_INSTANTIATE_OPS(T)                                                                                \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                             \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                                \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                \
    template Tensor<T> add_bias(const Tensor<T>&, const Tensor<T>&);                                           \
    template Tensor<T> scale(const Tensor<T>&, T);                                                             \
    template Tensor<T> sigmoid(const Tensor<T>&);                                                              \
    template Tensor<T> gelu(const Tensor<T>&);                                                                 \
    template Tensor<T> relu(const Tensor<T>&);                                                                 \
    template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                    \
    template Tensor<T> dropout(const Tensor<T>&, double, CounterRng*, bool);                                   \
    template Tensor<T> concat_cols(const std::vector<Tensor<T>>&);                                             \
    template Tensor<T> slice_rows(const Tensor<T>&, Eigen::Index, Eigen::Index);                               \
    template Tensor<T> slice_cols(const Tensor<T>&, Eigen::Index, Eigen::Index);                               \
    template Tensor<T> gather_rows(const Tensor<T>&, const Index&);                                            \
    template Tensor<T> scatter_add_rows(const Tensor<T>&, const Index&, Eigen::Index);                         \
    template Tensor<T> pair_average_rows(const Tensor<T>&, const Index&);                                      \
    template Tensor<T> head_dot(const Tensor<T>&, const Tensor<T>&, int, T);                                   \
    template Tensor<T> segment_softmax(const Tensor<T>&, int);                                                 \
    template Tensor<T> segment_weighted_sum(const Tensor<T>&, const Tensor<T>&, int);                          \
    template Tensor<T> column_softmax(const Tensor<T>&);                                                       \
    template Tensor<T> softmax_rows(const Tensor<T>&);                                                         \
    template Tensor<T> sum_rows(const Tensor<T>&);                                                             \
    template Tensor<T> broadcast_rows(const Tensor<T>&, Eigen::Index);                                         \
    template Tensor<T> sum(const Tensor<T>&);                                                                  \
    template Tensor<T> cross_entropy_sum(const Tensor<T>&, std::span<const int>, std::span<const std::uint8_t>); \
    template std::vector<T> softmax(std::span<const T>);

RIGA_INSTANTIATE_OPS(float)
RIGA_INSTANTIATE_OPS(double)

#undef RIGA_INSTANTIATE_OPS

}  // namespace riga::nn
