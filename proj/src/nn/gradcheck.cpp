#include "riga/nn/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "riga/common/rng.h"

namespace riga::nn {

namespace {

double rel_error(double a, double n) { return std::abs(a - n) / std::max(1e-12, std::abs(a) + std::abs(n)); }

// Ridders' polynomial extrapolation of central differences with shrinking step.
template <typename T>
double ridders(const std::function<Tensor<T>()>& loss, T& slot, double h) {
    constexpr int kTable = 10;
    constexpr double kShrink = 1.4;
    constexpr double kShrink2 = kShrink * kShrink;
    constexpr double kSafe = 2.0;
    const T saved = slot;
    auto central = [&](double step) {
        slot = saved + static_cast<T>(step);
        const double up = static_cast<double>(loss().item());
        slot = saved - static_cast<T>(step);
        const double down = static_cast<double>(loss().item());
        slot = saved;
        return (up - down) / (2.0 * step);
    };
    double a[kTable][kTable];
    a[0][0] = central(h);
    double best = a[0][0];
    double err = std::numeric_limits<double>::infinity();
    for (int i = 1; i < kTable; ++i) {
        h /= kShrink;
        a[0][i] = central(h);
        double fac = kShrink2;
        for (int j = 1; j <= i; ++j) {
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0);
            fac *= kShrink2;
            const double e = std::max(std::abs(a[j][i] - a[j - 1][i]), std::abs(a[j][i] - a[j - 1][i - 1]));
            if (e <= err) {
                err = e;
                best = a[j][i];
            }
        }
        if (std::abs(a[i][i] - a[i - 1][i - 1]) >= kSafe * err) break;
    }
    return best;
}

}  // namespace

template <typename T>
GradCheckReport check_gradient(const std::function<Tensor<T>()>& loss, const std::vector<Tensor<T>>& params,
                               const GradCheckOptions& options) {
    for (auto p : params) p.zero_grad();
    loss().backward();
    std::vector<Matrix<T>> analytic;
    analytic.reserve(params.size());
    for (const auto& p : params) analytic.push_back(p.grad());

    GradCheckReport report;
    CounterRng rng(options.seed);
    const T eps = static_cast<T>(options.eps);
    NoGradGuard no_grad;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor<T> p = params[pi];
        std::vector<Eigen::Index> coords(static_cast<std::size_t>(p.size()));
        std::iota(coords.begin(), coords.end(), Eigen::Index{0});
        if (options.max_coords_per_param > 0 && coords.size() > options.max_coords_per_param) {
            for (std::size_t i = 0; i < options.max_coords_per_param; ++i) {
                const auto j = i + static_cast<std::size_t>(rng.below(coords.size() - i));
                std::swap(coords[i], coords[j]);
            }
            coords.resize(options.max_coords_per_param);
        }
        for (Eigen::Index c : coords) {
            T& slot = p.mutable_value().data()[c];
            const T saved = slot;
            slot = saved + eps;
            const double up = static_cast<double>(loss().item());
            slot = saved - eps;
            const double down = static_cast<double>(loss().item());
            slot = saved;
            double numeric = (up - down) / (2.0 * static_cast<double>(eps));
            const double a = static_cast<double>(analytic[pi].data()[c]);
            double err = rel_error(a, numeric);
            report.max_central_error = std::max(report.max_central_error, err);
            if (err > options.refine_above) {
                numeric = ridders(loss, slot, options.refine_step);
                err = rel_error(a, numeric);
                ++report.coords_refined;
            }
            ++report.coords_checked;
            if (err >= report.max_rel_error) {
                report.max_rel_error = err;
                report.worst_param = pi;
                report.worst_coord = c;
                report.worst_analytic = a;
                report.worst_numeric = numeric;
            }
        }
    }
    return report;
}

template GradCheckReport check_gradient<float>(const std::function<Tensor<float>()>&, const std::vector<Tensor<float>>&,
                                               const GradCheckOptions&);
template GradCheckReport check_gradient<double>(const std::function<Tensor<double>()>&,
                                                const std::vector<Tensor<double>>&, const GradCheckOptions&);

}  // namespace riga::nn
