#include "zlab/ergodic.hpp"

#include <cmath>

namespace zlab {

namespace {

void require_unitary(const Operator& T, const char* who) {
  const Eigen::Index d = T.dim();
  if (d == 0 || T.entries.cols() != d)
    throw config_error(std::string(who) + ": operator must be square");
  const double defect =
      spectral_norm(Mat(T.entries.adjoint() * T.entries) - Mat::Identity(d, d));
  if (defect > 1e-10)
    throw config_error(std::string(who) + ": operator is not unitary");
}

// cumulative gamma values for one row: gammas[l] = alpha_0 + .. + alpha_{l-1}
std::vector<double> gammas_of(const std::vector<double>& alpha) {
  std::vector<double> g(alpha.size() + 1, 0.0);
  for (size_t l = 0; l < alpha.size(); ++l) g[l + 1] = g[l] + alpha[l];
  return g;
}

}  // namespace

std::vector<double> Schedule::row(int n) const {
  if (n < 1) throw config_error("Schedule::row: n must be >= 1");
  switch (kind) {
    case Kind::uniform:
      return std::vector<double>(size_t(n), 1.0 / n);
    case Kind::linear_ramp: {
      std::vector<double> a(static_cast<size_t>(n));
      for (int l = 0; l < n; ++l)
        a[size_t(l)] = 2.0 * (l + 1) / (double(n) * (n + 1));
      return a;
    }
    case Kind::custom: {
      const auto it = custom_rows.find(n);
      if (it == custom_rows.end())
        throw config_error("Schedule::row: no custom row for n = " +
                           std::to_string(n));
      if (int(it->second.size()) != n)
        throw config_error("Schedule::row: custom row length mismatch");
      for (double a : it->second)
        if (!(a > 0.0))
          throw config_error("Schedule::row: weights must be positive");
      return it->second;
    }
  }
  throw config_error("Schedule::row: bad kind");
}

Schedule uniform_schedule() { return Schedule{Schedule::Kind::uniform, {}}; }

Schedule linear_ramp_schedule() {
  return Schedule{Schedule::Kind::linear_ramp, {}};
}

Schedule custom_schedule(std::map<int, std::vector<double>> rows) {
  return Schedule{Schedule::Kind::custom, std::move(rows)};
}

ScheduleDiagnostics schedule_diagnostics(const Schedule& schedule, int n) {
  const auto alpha = schedule.row(n);
  ScheduleDiagnostics d;
  d.n = n;
  for (double a : alpha) d.max_alpha = std::max(d.max_alpha, a);
  for (size_t l = 0; l + 1 < alpha.size(); ++l)
    d.sum_abs_diff += std::abs(alpha[l + 1] - alpha[l]);
  d.D_alpha = 2.0 * d.max_alpha + 3.0 * d.sum_abs_diff;
  d.S_alpha = d.max_alpha + d.sum_abs_diff;
  d.sqrt_n_sum_abs_diff = std::sqrt(double(n)) * d.sum_abs_diff;
  return d;
}

double gamma(const Schedule& schedule, int n, int l) {
  if (l < 0 || l > n) throw config_error("gamma: need 0 <= l <= n");
  const auto alpha = schedule.row(n);
  double g = 0.0;
  for (int p = 0; p < l; ++p) g += alpha[size_t(p)];
  return g;
}

double rho(const Schedule& schedule, int n, int l, double s, double t1) {
  if (s < t1) throw config_error("rho: need s >= t1");
  return t1 + (s - t1) * gamma(schedule, n, l);
}

AdmissibilityReport check_admissible(const Schedule& schedule,
                                     const std::vector<int>& n_grid) {
  if (n_grid.empty()) throw config_error("check_admissible: empty n grid");
  for (size_t i = 1; i < n_grid.size(); ++i)
    if (n_grid[i] <= n_grid[i - 1])
      throw config_error("check_admissible: n grid must increase");

  AdmissibilityReport rep;
  rep.admissible_consistent = true;
  for (int n : n_grid) {
    const auto alpha = schedule.row(n);
    double sum = 0.0;
    for (double a : alpha) sum += a;
    AdmissibilityRow r;
    r.n = n;
    r.residual = std::abs(sum - 1.0);
    if (r.residual > 1e-10)
      throw config_error("check_admissible: row for n = " + std::to_string(n) +
                         " does not sum to 1");
    const auto d = schedule_diagnostics(schedule, n);
    r.max_alpha = d.max_alpha;
    r.sum_abs_diff = d.sum_abs_diff;
    r.sqrt_n_sum_abs_diff = d.sqrt_n_sum_abs_diff;
    if (!rep.rows.empty()) {
      const auto& prev = rep.rows.back();
      if (r.max_alpha > prev.max_alpha || r.sum_abs_diff > prev.sum_abs_diff)
        rep.admissible_consistent = false;
    }
    rep.rows.push_back(r);
  }
  return rep;
}

Mat partial_ergodic_mean(const TimeDepGenerator& gen, const Operator& T,
                         const Schedule& schedule, int n, int k, double s) {
  require_unitary(T, "partial_ergodic_mean");
  if (T.dim() != gen.dim)
    throw config_error("partial_ergodic_mean: dimension mismatch");
  if (n < 1 || k < 0 || k > n - 1)
    throw config_error("partial_ergodic_mean: need 0 <= k <= n-1");
  const double slack = 1e-9 * (1.0 + std::abs(gen.t2 - gen.t1));
  if (s < gen.t1 - slack || s > gen.t2 + slack)
    throw config_error("partial_ergodic_mean: s outside the generator domain");

  const auto gammas = gammas_of(schedule.row(n));
  const double t1 = gen.t1;
  const Eigen::Index d = gen.dim;
  const Mat Tdag = T.entries.adjoint();

  Mat acc = Mat::Zero(d, d);
  Mat Tl = Mat::Identity(d, d);   // T^l
  Mat Tml = Mat::Identity(d, d);  // T^{-l}
  double gamma_prev = 0.0;
  Mat K_prev = gen.eval(t1);  // K at rho_{n,0}(s) = t1
  for (int l = 0; l <= k; ++l) {
    const double gamma_next = gammas[size_t(l + 1)];
    const Mat K_next = gen.eval(t1 + (s - t1) * gamma_next);
    acc += Tml * (gamma_next * K_next - gamma_prev * K_prev) * Tl;
    gamma_prev = gamma_next;
    K_prev = K_next;
    if (l < k) {
      Tl = T.entries * Tl;
      Tml = Tml * Tdag;
    }
  }
  return acc;
}

namespace {

// full mean (k = n-1) on a whole s-grid, sharing the T powers across points
std::vector<Mat> mean_on_grid(const TimeDepGenerator& gen, const Operator& T,
                              const Schedule& schedule, int n,
                              const std::vector<double>& s_grid) {
  const auto gammas = gammas_of(schedule.row(n));
  const double t1 = gen.t1;
  const Eigen::Index d = gen.dim;
  const Mat Tdag = T.entries.adjoint();
  const size_t m = s_grid.size();

  std::vector<Mat> acc(m, Mat::Zero(d, d));
  std::vector<Mat> K_prev(m);
  for (size_t i = 0; i < m; ++i) K_prev[i] = gen.eval(t1);
  Mat Tl = Mat::Identity(d, d);
  Mat Tml = Mat::Identity(d, d);
  double gamma_prev = 0.0;
  for (int l = 0; l < n; ++l) {
    const double gamma_next = gammas[size_t(l + 1)];
    for (size_t i = 0; i < m; ++i) {
      const Mat K_next = gen.eval(t1 + (s_grid[i] - t1) * gamma_next);
      acc[i] += Tml * (gamma_next * K_next - gamma_prev * K_prev[i]) * Tl;
      K_prev[i] = K_next;
    }
    gamma_prev = gamma_next;
    if (l < n - 1) {
      Tl = T.entries * Tl;
      Tml = Tml * Tdag;
    }
  }
  return acc;
}

}  // namespace

ErgodicMeanResult ergodic_mean_discrete(const TimeDepGenerator& gen,
                                        const Operator& T,
                                        const Schedule& schedule,
                                        const std::vector<double>& s_grid,
                                        double tol, int n_max) {
  require_unitary(T, "ergodic_mean_discrete");
  if (T.dim() != gen.dim)
    throw config_error("ergodic_mean_discrete: dimension mismatch");
  if (s_grid.empty()) throw config_error("ergodic_mean_discrete: empty s grid");
  if (n_max < 16) throw config_error("ergodic_mean_discrete: n_max too small");
  if (!(tol > 0)) throw config_error("ergodic_mean_discrete: tol must be > 0");

  ErgodicMeanResult res;
  res.s_grid = s_grid;
  res.tol = tol;

  std::vector<Mat> current = mean_on_grid(gen, T, schedule, 8, s_grid);
  for (int n = 8; 2 * n <= n_max; n *= 2) {
    std::vector<Mat> doubled = mean_on_grid(gen, T, schedule, 2 * n, s_grid);
    double dist = 0.0;
    for (size_t i = 0; i < s_grid.size(); ++i)
      dist = std::max(dist, spectral_norm(doubled[i] - current[i]));
    res.n_trace.emplace_back(n, dist);
    res.values = std::move(doubled);
    res.n_final = 2 * n;
    if (dist <= tol) {
      res.converged = true;
      break;
    }
    current = res.values;
  }
  return res;
}

TimeDepGenerator ergodic_mean_pinching(const TimeDepGenerator& gen,
                                       const Operator& U) {
  require_unitary(U, "ergodic_mean_pinching");
  if (U.dim() != gen.dim)
    throw config_error("ergodic_mean_pinching: dimension mismatch");
  if (gen.rep == TimeDepGenerator::Rep::tabulated)
    throw config_error("ergodic_mean_pinching: tabulated data has no "
                       "coefficient form to pinch");

  const auto res = spectral_resolution(U);
  TimeDepGenerator out = gen;
  for (Mat& c : out.coeffs) c = pinch(Operator(c), res).entries;
  return out;
}

namespace {

void require_unit_modulus(cxd omega, const char* who) {
  if (std::abs(std::abs(omega) - 1.0) > 1e-12)
    throw config_error(std::string(who) + ": omega must have unit modulus");
}

}  // namespace

cxd scalar_telescoping_sum_power(cxd omega, int k, long long n) {
  require_unit_modulus(omega, "scalar_telescoping_sum_power");
  if (k < 2) throw config_error("scalar_telescoping_sum_power: need k >= 2");
  if (n < 1) throw config_error("scalar_telescoping_sum_power: need n >= 1");
  cxd sum = 0.0;
  cxd wl = 1.0;
  for (long long l = 0; l < n; ++l) {
    const double a = std::pow(double(l + 1) / double(n), k);
    const double b = std::pow(double(l) / double(n), k);
    sum += wl * (a - b);
    wl *= omega;
    if ((l & 1023) == 1023) wl /= std::abs(wl);  // keep the phase on the circle
  }
  return sum;
}

cxd scalar_telescoping_sum_exp(cxd omega, cxd z, long long n) {
  require_unit_modulus(omega, "scalar_telescoping_sum_exp");
  if (n < 1) throw config_error("scalar_telescoping_sum_exp: need n >= 1");
  cxd sum = 0.0;
  cxd wl = 1.0;
  for (long long l = 0; l < n; ++l) {
    const cxd a = double(l + 1) * std::exp(z * (double(l + 1) / double(n)));
    const cxd b = double(l) * std::exp(z * (double(l) / double(n)));
    sum += wl * (a - b) / double(n);
    wl *= omega;
    if ((l & 1023) == 1023) wl /= std::abs(wl);
  }
  return sum;
}

Mat ergodic_mean_group(const Operator& K, const Operator& A,
                       GroupMeanMethod method, double S, int quad_points) {
  const Eigen::Index d = A.dim();
  if (K.dim() != d || K.entries.cols() != d || A.entries.cols() != d)
    throw config_error("ergodic_mean_group: dimension mismatch");
  const double skew_defect = spectral_norm(A.entries + A.entries.adjoint());
  if (skew_defect > 1e-10 * std::max(1.0, spectral_norm(A.entries)))
    throw config_error("ergodic_mean_group: generator must be skew-Hermitian");

  if (method == GroupMeanMethod::closed_form)
    return pinch(K, spectral_resolution(A)).entries;

  if (!(S > 0)) throw config_error("ergodic_mean_group: need S > 0");
  if (quad_points < 2)
    throw config_error("ergodic_mean_group: too few quadrature points");

  // A = V diag(i theta) V^*; conjugation only rotates the phases of V^* K V,
  // so diagonalize once instead of exponentiating at every node.
  Eigen::SelfAdjointEigenSolver<Mat> es(Mat(-cxd(0, 1) * A.entries));
  if (es.info() != Eigen::Success)
    throw numeric_error("ergodic_mean_group: eigensolver failed");
  const Mat V = es.eigenvectors();
  const Eigen::VectorXd theta = es.eigenvalues();
  const Mat M = V.adjoint() * K.entries * V;

  Mat avg = Mat::Zero(d, d);
  const double h = S / quad_points;
  for (int i = 0; i <= quad_points; ++i) {
    const double s = i * h;
    const double w = (i == 0 || i == quad_points) ? 0.5 : 1.0;  // trapezoid
    Mat term(d, d);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c)
        term(r, c) = M(r, c) * std::exp(cxd(0, (theta(c) - theta(r)) * s));
    avg += w * term;
  }
  avg /= double(quad_points);
  return V * avg * V.adjoint();
}

TimeDepGenerator coboundary_generator(const TimeDepGenerator& gen,
                                      const Operator& T) {
  require_unitary(T, "coboundary_generator");
  if (T.dim() != gen.dim)
    throw config_error("coboundary_generator: dimension mismatch");
  if (gen.rep == TimeDepGenerator::Rep::tabulated)
    throw config_error("coboundary_generator: tabulated data unsupported");
  const Mat Tdag = T.entries.adjoint();
  TimeDepGenerator out = gen;
  for (Mat& c : out.coeffs) c = c - Tdag * c * T.entries;
  return out;
}

double kernel_psi(double x) { return 2.0 * std::max(2.0, 3.0 * x); }

BoundAndMeasured kernel_bound_check(const TimeDepGenerator& L,
                                    const Operator& T,
                                    const Schedule& schedule, int n, int k,
                                    double s, double t1) {
  if (std::abs(t1 - L.t1) > 1e-12)
    throw config_error("kernel_bound_check: t1 must match the generator");
  const TimeDepGenerator K = coboundary_generator(L, T);
  BoundAndMeasured r;
  r.measured = spectral_norm(partial_ergodic_mean(K, T, schedule, n, k, s));
  const auto diag = schedule_diagnostics(schedule, n);
  r.bound = kernel_psi(s - t1) * diag.S_alpha * (L.c0_bound() + L.lipschitz());
  return r;
}

}  // namespace zlab
