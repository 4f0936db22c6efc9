#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "riga/nn/tensor.h"

namespace riga::nn {

struct GradCheckOptions {
    double eps = 1e-5;
    /// 0 checks every coordinate; otherwise this many coordinates per
    /// parameter tensor, drawn without replacement from `seed`.
    std::size_t max_coords_per_param = 0;
    std::uint64_t seed = 0;
    /// Coordinates whose central-difference error exceeds this get their
    /// numeric derivative recomputed by Ridders extrapolation from
    /// `refine_step`. Tiny gradients sit below the rounding floor of a
    /// single small step.
    double refine_above = std::numeric_limits<double>::infinity();
    double refine_step = 0.1;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t coords_checked = 0;
    std::size_t worst_param = 0;
    Eigen::Index worst_coord = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    double max_central_error = 0.0;  // before refinement
    std::size_t coords_refined = 0;
};

/**
 * Central finite differences against backward().
 *
 * Error per coordinate is |analytic - numeric| / max(1e-12, |analytic| + |numeric|);
 * the report carries the maximum. `loss` must be deterministic and rebuild
 * its graph on every call. Parameter gradients are zeroed first and left
 * holding the analytic gradient afterwards.
 */
template <typename T>
GradCheckReport check_gradient(const std::function<Tensor<T>()>& loss, const std::vector<Tensor<T>>& params,
                               const GradCheckOptions& options = {});

}  // namespace riga::nn
