#include "zlab/linops.hpp"

#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace zlab {

namespace {

void require_square_finite(const Mat& m, const char* who) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw config_error(std::string(who) + ": operator must be square and non-empty");
  if (!m.allFinite())
    throw config_error(std::string(who) + ": operator has NaN/Inf entries");
}

bool is_normal(const Mat& m) {
  const double scale = std::max(1.0, m.squaredNorm());
  return (m * m.adjoint() - m.adjoint() * m).norm() <= 1e-10 * scale;
}

}  // namespace

Operator identity_operator(Eigen::Index d, NormKind nk) {
  return Operator(Mat::Identity(d, d), nk);
}

double operator_norm(const Operator& M) {
  require_square_finite(M.entries, "operator_norm");
  return M.norm_kind == NormKind::spectral ? spectral_norm(M.entries)
                                           : frobenius_norm(M.entries);
}

BlockDecomposition make_block_decomposition(const Mat& basis, Eigen::Index dim_I) {
  require_square_finite(basis, "make_block_decomposition");
  const Eigen::Index d = basis.rows();
  if (dim_I < 1 || dim_I > d)
    throw config_error("make_block_decomposition: dim_I out of range");
  const double unitary_defect =
      spectral_norm(basis.adjoint() * basis - Mat::Identity(d, d));
  if (unitary_defect > 1e-10)
    throw config_error("make_block_decomposition: basis is not unitary (defect " +
                       std::to_string(unitary_defect) + ")");

  BlockDecomposition dec;
  dec.dim_I = dim_I;
  dec.dim_C = d - dim_I;
  dec.basis = basis;
  const Mat B_I = basis.leftCols(dim_I);
  dec.P_I = Operator(B_I * B_I.adjoint());
  dec.P_C = Operator(Mat::Identity(d, d) - dec.P_I.entries);
  return dec;
}

BlockDecomposition axis_block_decomposition(Eigen::Index dim, Eigen::Index dim_I) {
  return make_block_decomposition(Mat::Identity(dim, dim), dim_I);
}

SplitContraction validate_split_contraction(const Operator& T,
                                            const BlockDecomposition& dec,
                                            double margin) {
  require_square_finite(T.entries, "validate_split_contraction");
  const Eigen::Index d = T.dim();
  if (d != dec.dim_I + dec.dim_C)
    throw config_error("validate_split_contraction: dimension mismatch");

  // Work in the decomposition basis, where the split is a plain 2x2 block view.
  const Mat Tb = dec.basis.adjoint() * T.entries * dec.basis;
  const Eigen::Index dI = dec.dim_I, dC = dec.dim_C;

  if (dC > 0) {
    const double leak = std::max(spectral_norm(Tb.topRightCorner(dI, dC)),
                                 spectral_norm(Tb.bottomLeftCorner(dC, dI)));
    if (leak > 1e-10)
      throw config_error("validate_split_contraction: off-diagonal leakage " +
                         std::to_string(leak));
  }

  SplitContraction sc;
  sc.decomposition = dec;
  sc.T = T;
  sc.T_I = Tb.topLeftCorner(dI, dI);
  sc.T_C = dC > 0 ? Mat(Tb.bottomRightCorner(dC, dC)) : Mat(0, 0);

  const double iso_defect =
      spectral_norm(sc.T_I.adjoint() * sc.T_I - Mat::Identity(dI, dI));
  if (iso_defect > 1e-10)
    throw config_error("validate_split_contraction: T_I is not unitary (defect " +
                       std::to_string(iso_defect) + ")");

  sc.contraction_norm = dC > 0 ? spectral_norm(sc.T_C) : 0.0;
  if (dC > 0 && sc.contraction_norm >= 1.0 - margin)
    throw config_error("validate_split_contraction: ||T_C|| = " +
                       std::to_string(sc.contraction_norm) +
                       " is not a strict contraction (margin " +
                       std::to_string(margin) + ")");
  return sc;
}

SpectralResolution spectral_resolution(const Operator& M, double cluster_tol) {
  require_square_finite(M.entries, "spectral_resolution");
  if (cluster_tol <= 0) throw config_error("spectral_resolution: cluster_tol must be > 0");
  const Eigen::Index d = M.dim();
  const Mat& A = M.entries;

  Eigen::ComplexEigenSolver<Mat> es(A, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw numeric_error("spectral_resolution: eigen decomposition failed");
  const Vec lam = es.eigenvalues();
  const Mat V = es.eigenvectors();

  // Greedy clustering of eigenvalues by absolute distance to cluster centroids.
  std::vector<std::vector<Eigen::Index>> clusters;
  std::vector<cxd> centroids;
  for (Eigen::Index i = 0; i < d; ++i) {
    bool placed = false;
    for (size_t c = 0; c < clusters.size(); ++c) {
      if (std::abs(lam(i) - centroids[c]) <= cluster_tol) {
        clusters[c].push_back(i);
        cxd sum = 0;
        for (Eigen::Index j : clusters[c]) sum += lam(j);
        centroids[c] = sum / double(clusters[c].size());
        placed = true;
        break;
      }
    }
    if (!placed) {
      clusters.push_back({i});
      centroids.push_back(lam(i));
    }
  }

  SpectralResolution res;
  res.cluster_tol = cluster_tol;

  if (is_normal(A)) {
    // Orthonormalize each cluster's eigenvectors; projections come out Hermitian.
    for (size_t c = 0; c < clusters.size(); ++c) {
      Mat cols(d, Eigen::Index(clusters[c].size()));
      for (size_t k = 0; k < clusters[c].size(); ++k) cols.col(k) = V.col(clusters[c][k]);
      Eigen::HouseholderQR<Mat> qr(cols);
      const Mat Q = Mat(qr.householderQ()).leftCols(cols.cols());
      res.eigenvalues.push_back(centroids[c]);
      res.projections.emplace_back(Q * Q.adjoint());
    }
  } else {
    Eigen::FullPivLU<Mat> lu(V);
    if (!lu.isInvertible())
      throw numeric_error("spectral_resolution: eigenvector matrix is singular "
                          "(matrix defective within tolerance)");
    const Mat Vinv = lu.inverse();
    for (size_t c = 0; c < clusters.size(); ++c) {
      Mat sel = Mat::Zero(d, d);
      for (Eigen::Index j : clusters[c]) sel(j, j) = 1.0;
      res.eigenvalues.push_back(centroids[c]);
      res.projections.emplace_back(V * sel * Vinv);
    }
  }

  // Completeness, mutual orthogonality, and a defectiveness guard: on the
  // range of P_lambda the matrix must act as lambda up to the cluster radius.
  Mat sum = Mat::Zero(d, d);
  for (const auto& P : res.projections) sum += P.entries;
  if (spectral_norm(sum - Mat::Identity(d, d)) > 1e-9)
    throw numeric_error("spectral_resolution: projections do not sum to identity");
  for (size_t a = 0; a < res.projections.size(); ++a) {
    for (size_t b = 0; b < res.projections.size(); ++b) {
      const Mat prod = res.projections[a].entries * res.projections[b].entries;
      const Mat want = (a == b) ? res.projections[a].entries : Mat(Mat::Zero(d, d));
      if (spectral_norm(prod - want) > 1e-9)
        throw numeric_error("spectral_resolution: projections are not orthogonal");
    }
  }
  const double scale = std::max(1.0, spectral_norm(A));
  for (size_t c = 0; c < res.projections.size(); ++c) {
    double radius = 0.0;
    for (Eigen::Index j : clusters[c])
      radius = std::max(radius, std::abs(lam(j) - centroids[c]));
    const double defect = spectral_norm(
        (A - res.eigenvalues[c] * Mat::Identity(d, d)) * res.projections[c].entries);
    if (defect > radius + std::max(100.0 * cluster_tol, 1e-9) * scale)
      throw numeric_error("spectral_resolution: matrix is defective within tolerance "
                          "(cluster defect " + std::to_string(defect) + ")");
  }
  return res;
}

Operator pinch(const Operator& K, const SpectralResolution& resolution) {
  require_square_finite(K.entries, "pinch");
  if (resolution.projections.empty())
    throw config_error("pinch: empty resolution");
  const Eigen::Index d = K.dim();
  if (resolution.projections[0].dim() != d)
    throw config_error("pinch: dimension mismatch");
  Mat out = Mat::Zero(d, d);
  for (const auto& P : resolution.projections)
    out += P.entries * K.entries * P.entries;
  return Operator(std::move(out), K.norm_kind);
}

double weak_growth_bound(const Operator& K, GrowthMethod method,
                         const std::vector<double>& sample_grid) {
  require_square_finite(K.entries, "weak_growth_bound");
  if (method == GrowthMethod::closed_form) {
    const Mat H = 0.5 * (K.entries + K.entries.adjoint());
    Eigen::SelfAdjointEigenSolver<Mat> es(H, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
  }
  if (sample_grid.empty())
    throw config_error("weak_growth_bound: sampled method needs a non-empty grid");
  double best = -std::numeric_limits<double>::infinity();
  for (double v : sample_grid) {
    if (!(v > 0)) throw config_error("weak_growth_bound: grid values must be > 0");
    const Mat E = (K.entries * v).exp();
    best = std::max(best, std::log(spectral_norm(E)) / v);
  }
  return best;
}

Operator build_superoperator(SuperKind kind, const Operator& X, Eigen::Index max_dim) {
  require_square_finite(X.entries, "build_superoperator");
  const Eigen::Index d = X.dim();
  if (d > max_dim)
    throw config_error("build_superoperator: dimension " + std::to_string(d) +
                       " exceeds cap " + std::to_string(max_dim));
  const Mat id = Mat::Identity(d, d);
  // Column stacking: vec(X rho Y) = (Y^T kron X) vec(rho).
  const Mat L = Eigen::kroneckerProduct(id, X.entries);
  const Mat R = Eigen::kroneckerProduct(X.entries.transpose(), id);
  Mat out;
  switch (kind) {
    case SuperKind::left_mul: out = L; break;
    case SuperKind::right_mul: out = R; break;
    case SuperKind::commutator: out = L - R; break;
    case SuperKind::anticommutator: out = L + R; break;
  }
  return Operator(std::move(out), NormKind::frobenius);
}

Vec vec(const Mat& rho) {
  return Eigen::Map<const Vec>(rho.data(), rho.size());
}

Mat unvec(const Vec& v, Eigen::Index d) {
  if (v.size() != d * d) throw config_error("unvec: size mismatch");
  return Eigen::Map<const Mat>(v.data(), d, d);
}

}  // namespace zlab
