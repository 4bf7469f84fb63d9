// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

namespace latentem {

enum class StopReason { tolerance, max_iter };

inline const char* to_string(StopReason reason) {
    return reason == StopReason::tolerance ? "tolerance" : "max_iter";
}

/// Per-iteration record of the divergence during a fit. Entry 0 is the
/// divergence of the initial model; entry t the divergence after step t.
/// The sequence is non-increasing up to floating-point slack.
struct FitTrace {
    std::vector<double> kl_per_iteration;
    int iterations_run = 0;
    bool converged = false;
    StopReason stop_reason = StopReason::max_iter;

    double final_kl() const { return kl_per_iteration.back(); }
};

struct FitOptions {
    int max_iter = 5000;
    double tol = 1e-10;
};

/// Divergences at or below this value count as numerically zero: the relative
/// change criterion is meaningless against rounding noise of that size, and a
/// non-negative objective has nowhere left to go.
inline constexpr double kZeroDivergenceFloor = 1e-14;

namespace detail {

/// Shared fit driver. `step` advances the model in place and returns the
/// divergence after the step; iteration stops when the relative divergence
/// change drops below tol, the divergence reaches numerical zero, or
/// max_iter is hit.
template <typename Model, typename StepFn>
FitTrace iterate_em(Model& model, double initial_kl, StepFn&& step,
                    const FitOptions& options) {
    FitTrace trace;
    trace.kl_per_iteration.reserve(static_cast<std::size_t>(options.max_iter) + 1);
    trace.kl_per_iteration.push_back(initial_kl);
    double previous = initial_kl;
    for (int t = 0; t < options.max_iter; ++t) {
        const double current = step(model);
        trace.kl_per_iteration.push_back(current);
        ++trace.iterations_run;
        if (current <= kZeroDivergenceFloor ||
            std::abs(previous - current) / std::max(previous, 1e-30) < options.tol) {
            trace.converged = true;
            trace.stop_reason = StopReason::tolerance;
            return trace;
        }
        previous = current;
    }
    trace.stop_reason = StopReason::max_iter;
    return trace;
}

}  // namespace detail

}  // namespace latentem
