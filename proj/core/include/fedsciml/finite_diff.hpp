#pragma once

#include <span>
#include <vector>

#include "fedsciml/autodiff.hpp"

namespace fedsciml::ad {

/// Comparison of autodiff derivatives against central finite differences.
/// Per-component error is |ad - fd| / max(|ad|, |fd|, floor) where the floor
/// is 1e-3 times the larger vector infinity norm (plus a tiny absolute term),
/// the usual mixed absolute/relative gradient-check criterion: components
/// near zero are judged against the overall derivative scale instead of
/// dividing by noise.
struct FiniteDiffReport {
    int order = 1;
    double h = 0.0;
    double max_rel_err = 0.0;
    std::vector<double> autodiff;   // row-major (order 2: full Hessian)
    std::vector<double> finite;     // same layout
    std::vector<double> rel_err;    // same layout
};

/// order 1: compares the gradient at x. order 2: compares the full Hessian.
/// f must be built from supported tape primitives.
FiniteDiffReport finite_diff_check(const ScalarFn& f, std::span<const double> x,
                                   int order, double h);

} // namespace fedsciml::ad
