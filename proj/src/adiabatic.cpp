#include "zlab/adiabatic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Eigenvalues>

namespace zlab {

namespace {

Mat embed_invariant_block(const BlockDecomposition& dec, const Mat& block) {
  Mat full = Mat::Zero(dec.dim_I + dec.dim_C, dec.dim_I + dec.dim_C);
  full.topLeftCorner(dec.dim_I, dec.dim_I) = block;
  return dec.basis * full * dec.basis.adjoint();
}

void require_sample_time(const AdiabaticInstance& inst, double t,
                         const char* who) {
  const double slack = 1e-9 * (1.0 + std::abs(inst.t2 - inst.t1));
  if (!(t > inst.t1) || t > inst.t2 + slack)
    throw config_error(std::string(who) + ": t must lie in (t1, t2]");
}

void require_gamma(double gamma, const char* who) {
  if (!(gamma > 0.0) || !std::isfinite(gamma))
    throw config_error(std::string(who) + ": gamma must be positive");
}

// u -> gamma A + K(u), built representation-wise so constant/poly/trig
// drives stay in closed form.
TimeDepGenerator shift_by_rotation(const TimeDepGenerator& gen, double gamma,
                                   const Mat& A) {
  TimeDepGenerator out = gen;
  const Mat shift = gamma * A;
  switch (out.rep) {
    case TimeDepGenerator::Rep::constant:
    case TimeDepGenerator::Rep::poly:
      out.coeffs[0] += shift;
      break;
    case TimeDepGenerator::Rep::trig:
      out.coeffs[out.coeffs.size() / 2] += shift;
      break;
    case TimeDepGenerator::Rep::tabulated:
      for (Mat& s : out.samples) s += shift;
      break;
  }
  return out;
}

// Evolution of the pinched block generator from t1 to t; exponentiated
// directly when the drive is constant.
Mat mean_block_evolution(const TimeDepGenerator& mean, double t, double t1) {
  if (mean.rep == TimeDepGenerator::Rep::constant)
    return expm(mean.coeffs[0], t - t1);
  return propagate_adaptive(mean, t, t1, 1e-10);
}

double horner(const std::vector<double>& poly, double x) {
  double acc = 0.0;
  for (size_t k = poly.size(); k-- > 0;) acc = acc * x + poly[k];
  return acc;
}

// (x e^{tx} - y e^{ty}) / (x - y), continued to e^{tm}(1 + tm) at the
// diagonal.
double exp_difference_ratio(double x, double y, double t) {
  if (std::abs(x - y) <= 1e-9 * std::max({1.0, std::abs(x), std::abs(y)})) {
    const double m = 0.5 * (x + y);
    return std::exp(t * m) * (1.0 + t * m);
  }
  return (x * std::exp(t * x) - y * std::exp(t * y)) / (x - y);
}

void require_skew(const Operator& A, const char* who) {
  const double scale = std::max(1.0, spectral_norm(A.entries));
  if (spectral_norm(Mat(A.entries + A.entries.adjoint())) > 1e-10 * scale)
    throw config_error(std::string(who) + ": A must be skew-Hermitian");
}

}  // namespace

AdiabaticInstance make_adiabatic_instance(const Operator& A,
                                          const BlockDecomposition& dec,
                                          TimeDepGenerator gen,
                                          std::vector<double> gamma_grid) {
  const Eigen::Index d = dec.dim_I + dec.dim_C;
  if (A.dim() != d)
    throw config_error(
        "make_adiabatic_instance: operator dimension " +
        std::to_string(A.dim()) + " does not match the decomposition (" +
        std::to_string(dec.dim_I) + " + " + std::to_string(dec.dim_C) + ")");
  if (gen.dim != d)
    throw config_error("make_adiabatic_instance: generator dimension " +
                       std::to_string(gen.dim) +
                       " does not match the operator");
  if (gamma_grid.empty())
    throw config_error("make_adiabatic_instance: gamma_grid is empty");
  for (double g : gamma_grid)
    if (!(g > 0.0) || !std::isfinite(g))
      throw config_error(
          "make_adiabatic_instance: gamma_grid entries must be positive");

  const Mat Ab = dec.basis.adjoint() * A.entries * dec.basis;
  const Eigen::Index dI = dec.dim_I;
  const Eigen::Index dC = dec.dim_C;
  if (dC > 0) {
    const double leak =
        std::max(spectral_norm(Mat(Ab.topRightCorner(dI, dC))),
                 spectral_norm(Mat(Ab.bottomLeftCorner(dC, dI))));
    if (leak > 1e-10)
      throw config_error(
          "make_adiabatic_instance: A does not respect the block split "
          "(off-diagonal norm " +
          std::to_string(leak) + ")");
  }

  AdiabaticInstance inst;
  inst.decomposition = dec;
  inst.A = A;
  inst.A_I = Ab.topLeftCorner(dI, dI);
  inst.A_C = Ab.bottomRightCorner(dC, dC);
  if (spectral_norm(Mat(inst.A_I + inst.A_I.adjoint())) > 1e-10)
    throw config_error(
        "make_adiabatic_instance: the invariant block of A must be "
        "skew-Hermitian");

  if (dC > 0) {
    Eigen::SelfAdjointEigenSolver<Mat> es(
        0.5 * (inst.A_C + inst.A_C.adjoint()));
    inst.w_C = es.eigenvalues().maxCoeff();
    if (!(inst.w_C < 0.0))
      throw config_error(
          "make_adiabatic_instance: the complement block of A must decay "
          "strictly (w_C = " +
          std::to_string(inst.w_C) + ")");
    // ||exp(A_C v)|| <= exp(w_C v) is the logarithmic-norm estimate; a
    // violated sample means the exponential itself went bad.
    for (double v : {0.25, 1.0, 4.0}) {
      const double got = spectral_norm(expm(inst.A_C, v));
      if (got > std::exp(inst.w_C * v) * (1.0 + 1e-9) + 1e-12)
        throw numeric_error(
            "make_adiabatic_instance: exp(A_C v) exceeds its decay envelope "
            "at v = " +
            std::to_string(v));
    }
  } else {
    inst.w_C = -std::numeric_limits<double>::infinity();
  }

  inst.t1 = gen.t1;
  inst.t2 = gen.t2;
  inst.gen = std::move(gen);
  inst.gamma_grid = std::move(gamma_grid);
  return inst;
}

Mat adiabatic_propagator(const AdiabaticInstance& inst, double gamma, double t,
                         long steps, long max_steps) {
  require_gamma(gamma, "adiabatic_propagator");
  require_sample_time(inst, t, "adiabatic_propagator");
  const TimeDepGenerator combined =
      shift_by_rotation(inst.gen, gamma, inst.A.entries);
  long n = steps;
  if (n <= 0)
    n = combined.rep == TimeDepGenerator::Rep::constant
            ? 1
            : long(std::ceil(64.0 * gamma * (t - inst.t1)));
  n = std::max(n, 1L);
  if (n > max_steps || n > long(std::numeric_limits<int>::max()))
    throw numeric_error("adiabatic_propagator: step budget " +
                        std::to_string(n) + " exceeds the cap " +
                        std::to_string(max_steps));
  return propagate(combined, t, inst.t1, int(n));
}

TimeDepGenerator adiabatic_mean_block_generator(const AdiabaticInstance& inst) {
  const Eigen::Index dI = inst.decomposition.dim_I;
  const Mat B_I = inst.decomposition.basis.leftCols(dI);
  const SpectralResolution res =
      spectral_resolution(Operator(inst.A_I, inst.A.norm_kind));
  const auto compress_and_pinch = [&](const Mat& K) {
    return pinch(Operator(B_I.adjoint() * K * B_I, inst.A.norm_kind), res)
        .entries;
  };
  TimeDepGenerator out = inst.gen;
  out.dim = dI;
  for (Mat& c : out.coeffs) c = compress_and_pinch(c);
  for (Mat& s : out.samples) s = compress_and_pinch(s);
  return out;
}

Mat adiabatic_limit(const AdiabaticInstance& inst, double gamma, double t) {
  require_gamma(gamma, "adiabatic_limit");
  require_sample_time(inst, t, "adiabatic_limit");
  const TimeDepGenerator mean = adiabatic_mean_block_generator(inst);
  const Mat G = mean_block_evolution(mean, t, inst.t1);
  return embed_invariant_block(inst.decomposition,
                               expm(inst.A_I, gamma * (t - inst.t1)) * G);
}

ErrorCurve adiabatic_error_curve(
    const AdiabaticInstance& inst, double t,
    const std::optional<AdiabaticBoundParams>& params) {
  require_sample_time(inst, t, "adiabatic_error_curve");
  for (size_t i = 0; i + 1 < inst.gamma_grid.size(); ++i)
    if (!(inst.gamma_grid[i] < inst.gamma_grid[i + 1]))
      throw config_error(
          "adiabatic_error_curve: gamma_grid must be strictly increasing");

  const TimeDepGenerator mean = adiabatic_mean_block_generator(inst);
  const Mat G = mean_block_evolution(mean, t, inst.t1);
  const bool constant_drive =
      inst.gen.rep == TimeDepGenerator::Rep::constant;

  ErrorCurve curve;
  curve.reserve(inst.gamma_grid.size());
  for (double gamma : inst.gamma_grid) {
    ErrorCurveRow row;
    row.control = gamma;
    const Mat limit = embed_invariant_block(
        inst.decomposition, expm(inst.A_I, gamma * (t - inst.t1)) * G);
    row.measured =
        spectral_norm(Mat(adiabatic_propagator(inst, gamma, t) - limit));
    if (params && constant_drive)
      row.bound = adiabatic_convergence_bound(
          inst.A, Operator(inst.gen.coeffs[0], inst.A.norm_kind), *params,
          t - inst.t1, gamma);
    curve.push_back(std::move(row));
  }
  return curve;
}

double adiabatic_convergence_bound(const Operator& A, const Operator& B,
                                   const AdiabaticBoundParams& params,
                                   double t, double gamma) {
  if (A.dim() != B.dim())
    throw config_error(
        "adiabatic_convergence_bound: operator dimensions disagree");
  if (!(t > 0.0) || !std::isfinite(t))
    throw config_error("adiabatic_convergence_bound: t must be positive");
  require_gamma(gamma, "adiabatic_convergence_bound");
  if (!(params.M_A >= 1.0))
    throw config_error("adiabatic_convergence_bound: M_A must be >= 1");
  if (!(params.eta > 0.0))
    throw config_error("adiabatic_convergence_bound: eta must be positive");
  if (params.p_poly.empty())
    throw config_error("adiabatic_convergence_bound: p_poly is empty");
  for (double c : params.p_poly)
    if (!std::isfinite(c))
      throw config_error(
          "adiabatic_convergence_bound: p_poly coefficients must be finite");
  if (!std::isfinite(params.c_AB) || params.c_AB < 0.0)
    throw config_error("adiabatic_convergence_bound: c_AB must be >= 0");

  const double p_at = horner(params.p_poly, gamma * t);
  if (!(p_at > 0.0))
    throw config_error(
        "adiabatic_convergence_bound: p(gamma t) must be positive");
  const double tail = std::exp(-gamma * t) * p_at;

  const double nB = operator_norm(B);
  if (nB == 0.0) return tail;

  // pinching of B by the spectral projections of A onto the imaginary axis
  const SpectralResolution res = spectral_resolution(A);
  const double axis_tol = 1e-10 * std::max(1.0, spectral_norm(A.entries));
  Mat pinched = Mat::Zero(B.dim(), B.dim());
  for (size_t j = 0; j < res.eigenvalues.size(); ++j)
    if (std::abs(res.eigenvalues[j].real()) <= axis_tol)
      pinched += res.projections[j].entries * B.entries *
                 res.projections[j].entries;
  const double nP = operator_norm(Operator(pinched, B.norm_kind));

  bool p_is_one = params.p_poly[0] == 1.0;
  for (size_t k = 1; k < params.p_poly.size(); ++k)
    if (params.p_poly[k] != 0.0) p_is_one = false;
  if (params.M_A == 1.0 && p_is_one)
    return 2.0 * params.c_AB / gamma * exp_difference_ratio(nB, nP, t) +
           std::exp(-gamma * t);

  const double head = params.c_AB * (params.M_A + 1.0) / gamma *
                      exp_difference_ratio(params.M_A * nB, nP, t);
  // int_0^inf e^{-eta s} p(s) ds = sum_k p_k k! / eta^{k+1}
  double integral = 0.0;
  double factorial = 1.0;
  double eta_pow = params.eta;
  for (size_t k = 0; k < params.p_poly.size(); ++k) {
    if (k > 0) factorial *= double(k);
    integral += params.p_poly[k] * factorial / eta_pow;
    eta_pow *= params.eta;
  }
  if (!(integral > 0.0))
    throw config_error(
        "adiabatic_convergence_bound: the decay-profile integral must be "
        "positive");
  const double middle =
      params.M_A * std::exp(params.M_A * nB) / gamma * integral;
  return head + middle + tail;
}

double adiabatic_witness_bound(double gamma, double norm_L, double eps,
                               double norm_K, double t) {
  require_gamma(gamma, "adiabatic_witness_bound");
  if (norm_L < 0.0 || eps < 0.0 || norm_K < 0.0 || t < 0.0)
    throw config_error("adiabatic_witness_bound: norms, eps, and t must be "
                       "nonnegative");
  const double u = 2.0 * norm_L / gamma;
  return u * std::exp(u) + eps * t * std::exp((norm_K + eps) * t);
}

Mat commutator_witness(const Operator& K, const Operator& A,
                       double degeneracy_tol) {
  if (K.dim() != A.dim())
    throw config_error("commutator_witness: operator dimensions disagree");
  if (!(degeneracy_tol >= 0.0))
    throw config_error("commutator_witness: degeneracy_tol must be >= 0");
  require_skew(A, "commutator_witness");

  // diagonalize the Hermitian generator H = -iA; in its eigenbasis
  // [L, A]_{jk} = L_{jk} (a_k - a_j) with a = i h
  const Mat H = 0.5 * (cxd(0.0, -1.0) * A.entries +
                       (cxd(0.0, -1.0) * A.entries).adjoint());
  Eigen::SelfAdjointEigenSolver<Mat> es(H);
  const Mat V = es.eigenvectors();
  const Eigen::VectorXd h = es.eigenvalues();
  const Mat Kp = V.adjoint() * K.entries * V;
  Mat Lp = Mat::Zero(K.dim(), K.dim());
  for (Eigen::Index j = 0; j < h.size(); ++j)
    for (Eigen::Index k = 0; k < h.size(); ++k)
      if (std::abs(h(k) - h(j)) > degeneracy_tol)
        Lp(j, k) = Kp(j, k) / (cxd(0.0, 1.0) * (h(k) - h(j)));
  return V * Lp * V.adjoint();
}

double group_mean_kernel_witness_check(const Operator& L, const Operator& A,
                                       double t_check) {
  if (L.dim() != A.dim())
    throw config_error(
        "group_mean_kernel_witness_check: operator dimensions disagree");
  if (!std::isfinite(t_check))
    throw config_error("group_mean_kernel_witness_check: t_check must be "
                       "finite");
  require_skew(A, "group_mean_kernel_witness_check");
  const Mat U = expm(A.entries, t_check);
  const Mat defect =
      U * U.adjoint() - Mat::Identity(A.dim(), A.dim());
  if (spectral_norm(defect) > 1e-8)
    throw numeric_error(
        "group_mean_kernel_witness_check: exp(A t_check) is not unitary");
  const Mat comm = L.entries * A.entries - A.entries * L.entries;
  return spectral_norm(ergodic_mean_group(Operator(comm, A.norm_kind), A,
                                          GroupMeanMethod::closed_form));
}

}  // namespace zlab
