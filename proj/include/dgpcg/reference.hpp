#pragma once

// Slow, direct implementations used to cross-check the production code:
// a dense joint-Gaussian route to the GP posterior, a literal layer-by-layer
// kernel recursion, central differences and an eigenvalue log-determinant.

#include <functional>
#include <vector>

#include "dgpcg/gp.hpp"
#include "dgpcg/kernels.hpp"
#include "dgpcg/tensor.hpp"

namespace dgpcg::reference {

/// Effective kernel evaluated with no shared helpers: base value, then the
/// composition applied once per extra layer.
double effective_kernel(const KernelSpec& spec, const Vec& x, const Vec& y);

/// Posterior of the query through the precision matrix of the full
/// (N+1)-dimensional joint Gaussian over the neighbors' outputs and the query,
/// inverted densely with full-pivot LU.
GpPosterior gp_condition(const KernelSpec& spec, const FeatureBank& bank,
                         const std::vector<std::size_t>& neighbor_ids, const Vec& query_s);

/// Central-difference gradient of f at x.
Vec finite_difference(const std::function<double(const Vec&)>& f, const Vec& x, double h);

/// Sum of log eigenvalues of a symmetric positive-definite matrix.
double logdet(const Mat& a);

}  // namespace dgpcg::reference
