#pragma once

// Averaging schedules, discrete generalized ergodic means of unitary
// conjugation orbits, closed-form pinching means, continuous group means,
// and the kernel-decay diagnostics.

#include "zlab/linops.hpp"
#include "zlab/propagate.hpp"

#include <map>
#include <utility>

namespace zlab {

// Weight rows alpha_{n,0..n-1}: positive, summing to one for every n.
// Builtins: uniform (1/n) and linear_ramp (2(l+1)/(n(n+1))); custom rows are
// supplied explicitly per n.
struct Schedule {
  enum class Kind { uniform, linear_ramp, custom };

  Kind kind = Kind::uniform;
  std::map<int, std::vector<double>> custom_rows;

  std::vector<double> row(int n) const;
};

Schedule uniform_schedule();
Schedule linear_ramp_schedule();
Schedule custom_schedule(std::map<int, std::vector<double>> rows);

// Per-n summary of a schedule row. D_alpha enters the coboundary-averaging
// bound, S_alpha the kernel-decay bound; sqrt_n_sum_abs_diff is the extra
// decay the Zeno limit needs from a schedule.
struct ScheduleDiagnostics {
  int n = 0;
  double max_alpha = 0.0;
  double sum_abs_diff = 0.0;  // sum over l of |alpha_{n,l+1} - alpha_{n,l}|
  double D_alpha = 0.0;       // 2 max + 3 sum_abs_diff
  double S_alpha = 0.0;       // max + sum_abs_diff
  double sqrt_n_sum_abs_diff = 0.0;
};

ScheduleDiagnostics schedule_diagnostics(const Schedule& schedule, int n);

// gamma_{n,l} = alpha_{n,0} + ... + alpha_{n,l-1}; gamma_{n,0} = 0,
// gamma_{n,n} = 1.
double gamma(const Schedule& schedule, int n, int l);

// rho_{n,l}(s) = t1 + (s - t1) gamma_{n,l}: the reparametrized times at which
// the averaged generator is sampled.
double rho(const Schedule& schedule, int n, int l, double s, double t1);

struct AdmissibilityRow {
  int n = 0;
  double residual = 0.0;  // |sum alpha - 1|
  double max_alpha = 0.0;
  double sum_abs_diff = 0.0;
  double sqrt_n_sum_abs_diff = 0.0;
};

struct AdmissibilityReport {
  std::vector<AdmissibilityRow> rows;
  // max alpha and sum |delta alpha| are non-increasing along the grid
  bool admissible_consistent = false;
};

AdmissibilityReport check_admissible(const Schedule& schedule,
                                     const std::vector<int>& n_grid);

// The n-point averaged generator cut off after term k:
//   sum_{l=0}^{k} T^{-l} (gamma_{n,l+1} K(rho_{n,l+1}(s))
//                          - gamma_{n,l} K(rho_{n,l}(s))) T^{l},
// with 0 <= k <= n-1. For constant K this telescopes to
// sum_{l<=k} alpha_{n,l} T^{-l} K T^{l}.
Mat partial_ergodic_mean(const TimeDepGenerator& gen, const Operator& T,
                         const Schedule& schedule, int n, int k, double s);

struct ErgodicMeanResult {
  std::vector<double> s_grid;
  std::vector<Mat> values;  // mean at n_final, one entry per grid point
  std::vector<std::pair<int, double>> n_trace;  // (n, grid-sup ||P_n - P_2n||)
  int n_final = 0;
  bool converged = false;
  double tol = 0.0;
};

// Doubles n from 8 and stops once the grid-sup Cauchy increment drops below
// tol (or n_max is hit, which is reported, not thrown).
ErgodicMeanResult ergodic_mean_discrete(const TimeDepGenerator& gen,
                                        const Operator& T,
                                        const Schedule& schedule,
                                        const std::vector<double>& s_grid,
                                        double tol = 1e-6, int n_max = 1 << 12);

// Closed form of the uniform-schedule mean for polynomial/trigonometric K:
// every coefficient is pinched by the spectral resolution of U, i.e.
// s -> sum_lambda P_lambda K(s) P_lambda. Tabulated data is refused.
TimeDepGenerator ergodic_mean_pinching(const TimeDepGenerator& gen,
                                       const Operator& U);

// sum_{l<n} omega^l ((l+1)^k - l^k) / n^k   (needs k >= 2)
cxd scalar_telescoping_sum_power(cxd omega, int k, long long n);

// sum_{l<n} omega^l ((l+1) e^{z(l+1)/n} - l e^{zl/n}) / n
cxd scalar_telescoping_sum_exp(cxd omega, cxd z, long long n);

enum class GroupMeanMethod { closed_form, integral };

// Time average of s -> T(-s) K T(s) over the unitary group T(s) = exp(As):
// closed_form pinches K by the spectral resolution of the skew-Hermitian A;
// integral takes the trapezoid average over [0, S].
Mat ergodic_mean_group(const Operator& K, const Operator& A,
                       GroupMeanMethod method = GroupMeanMethod::closed_form,
                       double S = 200.0, int quad_points = 4096);

// K(s) - T^{-1} K(s) T, coefficient-wise; such generators average to zero.
TimeDepGenerator coboundary_generator(const TimeDepGenerator& gen,
                                      const Operator& T);

// psi(x) = 2 max{2, 3x}, the prefactor of the kernel-decay bound.
double kernel_psi(double x);

// For K = L - T^{-1} L T: measured = ||partial mean of K at (n, k, s)||,
// bound = psi(s - t1) * S_alpha(n) * (||L||_C0 + [L]_1).
BoundAndMeasured kernel_bound_check(const TimeDepGenerator& L,
                                    const Operator& T,
                                    const Schedule& schedule, int n, int k,
                                    double s, double t1);

}  // namespace zlab
