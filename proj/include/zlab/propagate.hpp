#pragma once

// Matrix exponentials, time-ordered propagators for time-dependent
// generators, Picard-series terms, Trotter products, and the elementary
// product/perturbation bounds they satisfy.

#include "zlab/linops.hpp"

#include <functional>

namespace zlab {

// A continuous B(X)-valued function of time on [t1, t2]. Supported shapes:
//   constant   K(t) = C[0]
//   poly       K(t) = sum_k C[k] t^k
//   trig       K(t) = sum_{k=-m..m} C[k+m] exp(2*pi*i*k*t/period)
//   tabulated  linear interpolation through (sample_times, samples)
struct TimeDepGenerator {
  enum class Rep { constant, poly, trig, tabulated };

  Rep rep = Rep::constant;
  double t1 = 0.0;
  double t2 = 1.0;
  Eigen::Index dim = 0;
  std::vector<Mat> coeffs;
  double period = 1.0;  // trig only
  std::vector<double> sample_times;
  std::vector<Mat> samples;

  Mat eval(double t) const;
  Mat deriv(double t) const;  // analytic; poly/trig/constant only

  // sup-over-grid of ||K(t)|| (spectral); converges to ||K||_C0 as the grid
  // refines. This is the value plugged into the error-bound formulas.
  double c0_norm(int grid_points = 1024) const;

  // analytic upper bound on ||K||_C0 from the coefficients; >= c0_norm()
  double c0_bound() const;

  // upper bound on the Lipschitz seminorm [K]_1, from the derivative's
  // coefficient bound; not available for tabulated data
  double lipschitz() const;
};

TimeDepGenerator constant_generator(const Mat& K0, double t1, double t2);
TimeDepGenerator poly_generator(std::vector<Mat> coeffs, double t1, double t2);
TimeDepGenerator trig_generator(std::vector<Mat> coeffs, double period,
                                double t1, double t2);
TimeDepGenerator tabulated_generator(std::vector<double> times,
                                     std::vector<Mat> samples);

// exp(K t): scaling-and-squaring with a Pade approximant (backward error
// well under the 1e-12 target for the sizes used here).
Mat expm(const Mat& K, double t = 1.0);
Operator expm(const Operator& K, double t = 1.0);

// F(u, v) for the ordered product of exponential-midpoint factors over
// `steps` equal substeps (order 2); exact for constant generators.
Mat propagate(const TimeDepGenerator& gen, double u, double v, int steps);

// Doubles the step count until the self-discrepancy of the result drops
// below tol (or the cap is hit), which makes downstream "measured" values
// trustworthy to ~tol.
Mat propagate_adaptive(const TimeDepGenerator& gen, double u, double v,
                       double tol = 1e-10, int initial_steps = 16,
                       int max_steps = 1 << 20);

struct Propagator {
  enum class Solver { exact_constant, exp_midpoint };

  TimeDepGenerator generator;
  Solver solver = Solver::exp_midpoint;
  int steps_per_unit_time = 256;

  Mat operator()(double u, double v) const;
};

// l-th Picard term {K}_l(u, v), built by the recursion
// {K}_l(u,v) = int_v^u K(s) {K}_{l-1}(s,v) ds on a shared Simpson grid.
Mat picard_term(const TimeDepGenerator& gen, int l, double u, double v,
                int quad_points = 256, int max_order = 20);

// (u-v)^k ||K||_C0^k exp((u-v) ||K||_C0) — the tail of the Picard series
// after the first k terms.
double picard_tail_bound(double c0_norm, double u, double v, int k);

// [exp(K1 t/n) exp(K2 t/n)]^n
Mat trotter_product(const Mat& K1, const Mat& K2, double t, int n);

// N exp(sum M_k) sum gaps — upper bound on ||prod A - prod B|| when
// ||A_k||, ||B_k|| <= exp(M_k) and exp(-M_k) <= N.
double product_difference_bound(const std::vector<double>& norm_caps, double N,
                                const std::vector<double>& term_gaps);

struct BoundAndMeasured {
  double bound = 0.0;
  double measured = 0.0;
};

// exp(int omega) * int ||K - L|| against the actual propagator distance.
// omega must dominate both weak growth bounds pointwise (checked on a grid).
BoundAndMeasured perturbation_bound(const TimeDepGenerator& genK,
                                    const TimeDepGenerator& genL, double u,
                                    double v,
                                    const std::function<double(double)>& omega,
                                    int quad_points = 256);

// lhs = ||F(u,v)||, rhs = exp(int_v^u wgb(K(s)) ds); contract lhs <= rhs + 1e-8.
BoundAndMeasured propagator_growth_check(const TimeDepGenerator& gen, double u,
                                         double v, int quad_points = 256);

// Majorants f_X with ||{X}_l(u,v)|| <= f_X(u-v)^l / l! for the three
// generators entering the interleaving estimate.
struct F4Majorants {
  std::function<double(double)> f_KM;  // generator K + M
  std::function<double(double)> f_M;
  std::function<double(double)> f_K;
};

// g^2 e^g + h^2 e^h with g = f_KM(u-v) + f_M(v-w), h = f_K(u-v) + f_M(u-w):
// bounds ||F_{K+M}(u,v) F_M(v,w) - F_M(u,w) F_K(u,v)||.
double interleaving_bound_F4(const F4Majorants& f, double u, double v, double w);

// points equally spaced values covering [a, b] inclusively.
std::vector<double> uniform_grid(double a, double b, int points);

// Composite Simpson on [a, b] for matrix- or real-valued integrands.
Mat simpson_matrix(const std::function<Mat(double)>& f, double a, double b,
                   int points = 256);
double simpson_real(const std::function<double(double)>& f, double a, double b,
                    int points = 256);

}  // namespace zlab
