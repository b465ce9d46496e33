#pragma once

// Dense complex-matrix operator algebra: norms, block decompositions,
// spectral projections, weak growth bounds, superoperator builders.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace zlab {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

// Thrown for malformed inputs (bad shapes, bad config values). CLI exit code 2.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Thrown when a numerical contract cannot be met (defective matrix, NaNs,
// failed convergence). CLI exit code 3.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class NormKind { spectral, frobenius };

// An element of B(X) with X = C^d. The norm kind travels with the value so
// norm-dependent quantities (operator_norm, growth bounds) stay consistent.
struct Operator {
  Mat entries;
  NormKind norm_kind = NormKind::spectral;

  Operator() = default;
  explicit Operator(Mat m, NormKind nk = NormKind::spectral)
      : entries(std::move(m)), norm_kind(nk) {}

  Eigen::Index dim() const { return entries.rows(); }
};

Operator identity_operator(Eigen::Index d, NormKind nk = NormKind::spectral);

// Largest singular value / root-sum-of-squares, usable on any dense expression.
template <class Derived>
double spectral_norm(const Eigen::MatrixBase<Derived>& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  return m.derived().jacobiSvd().singularValues()(0);
}

template <class Derived>
double frobenius_norm(const Eigen::MatrixBase<Derived>& m) {
  return m.derived().norm();
}

double operator_norm(const Operator& M);

// Orthogonal splitting X = X_I (+) X_C. `basis` is unitary; its first dim_I
// columns span X_I. Projections are stored in the original basis.
struct BlockDecomposition {
  Eigen::Index dim_I = 0;
  Eigen::Index dim_C = 0;
  Mat basis;
  Operator P_I;
  Operator P_C;
};

BlockDecomposition make_block_decomposition(const Mat& basis, Eigen::Index dim_I);

// Decomposition along the leading coordinate axes (basis = identity).
BlockDecomposition axis_block_decomposition(Eigen::Index dim, Eigen::Index dim_I);

// T = T_I (+) T_C with T_I unitary on X_I and T_C a strict contraction.
// T_I / T_C are the diagonal blocks expressed in the decomposition basis.
struct SplitContraction {
  BlockDecomposition decomposition;
  Operator T;
  Mat T_I;
  Mat T_C;
  double contraction_norm = 0.0;
};

SplitContraction validate_split_contraction(const Operator& T,
                                            const BlockDecomposition& dec,
                                            double margin = 1e-6);

// Resolution of a diagonalizable matrix into eigenvalue clusters and their
// spectral projections: M = sum_lambda lambda * P_lambda (+ O(cluster radius)).
struct SpectralResolution {
  std::vector<cxd> eigenvalues;
  std::vector<Operator> projections;
  double cluster_tol = 1e-8;
};

SpectralResolution spectral_resolution(const Operator& M, double cluster_tol = 1e-8);

// sum_lambda P_lambda K P_lambda — kills the off-diagonal blocks of K in the
// eigenbasis of the resolved operator. Idempotent.
Operator pinch(const Operator& K, const SpectralResolution& resolution);

enum class GrowthMethod { closed_form, sampled };

// Least w with ||exp(Kv)|| <= exp(wv) for all v >= 0, in the spectral norm:
// the closed form is the numerical abscissa lambda_max((K + K^*)/2); `sampled`
// evaluates ln||exp(Kv)||/v on the given v-grid (a lower estimate of the sup).
// Growth is always measured in the spectral norm; an entrywise root-sum-squares
// reading would already fail at v = 0 since ||1||_F = sqrt(d).
double weak_growth_bound(const Operator& K,
                         GrowthMethod method = GrowthMethod::closed_form,
                         const std::vector<double>& sample_grid = {});

enum class SuperKind { left_mul, right_mul, commutator, anticommutator };

// Lift X to an operator on the d^2-dimensional Hilbert-Schmidt space via
// column-stacking: left_mul(X) vec(rho) = vec(X rho), etc. The result is
// tagged frobenius (the HS norm of states); note that the *induced* operator
// norm on that space is the spectral norm of the returned d^2 x d^2 matrix,
// because column-stacking maps the HS inner product to the Euclidean one.
Operator build_superoperator(SuperKind kind, const Operator& X,
                             Eigen::Index max_dim = 16);

// Column-stacking vectorization and its inverse.
Vec vec(const Mat& rho);
Mat unvec(const Vec& v, Eigen::Index d);

}  // namespace zlab
