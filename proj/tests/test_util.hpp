#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <vector>

#include "fgan/mlp.hpp"

namespace testutil {

// Central-difference gradient of an arbitrary scalar loss over a parameter
// vector. Lives in test code only; the implementations under test never see
// it.
template <typename LossFn>
std::vector<double> finite_difference_gradient(const fgan::ParamVector& params,
                                               LossFn&& loss, double h = 1e-5) {
    std::vector<double> grad(params.size());
    fgan::ParamVector p = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        p.values[i] = params.values[i] + h;
        const double up = loss(p);
        p.values[i] = params.values[i] - h;
        const double down = loss(p);
        p.values[i] = params.values[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

// |a - b| <= max(abs_tol, rel_tol * max(|a|, |b|)) per coordinate; returns
// the worst offending index or -1.
inline long long worst_gradient_mismatch(const std::vector<double>& analytic,
                                         const std::vector<double>& numeric,
                                         double rel_tol = 1e-4,
                                         double abs_tol = 1e-7) {
    long long worst = -1;
    double worst_excess = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double diff = std::fabs(analytic[i] - numeric[i]);
        const double scale = std::max(std::fabs(analytic[i]), std::fabs(numeric[i]));
        const double allowed = std::max(abs_tol, rel_tol * scale);
        if (diff > allowed && diff - allowed > worst_excess) {
            worst_excess = diff - allowed;
            worst = static_cast<long long>(i);
        }
    }
    return worst;
}

}  // namespace testutil
