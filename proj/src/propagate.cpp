#include "zlab/propagate.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

namespace zlab {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

void require_time_order(double u, double v, const char* who) {
  if (!(u >= v)) throw config_error(std::string(who) + ": requires u >= v");
  if (!std::isfinite(u) || !std::isfinite(v))
    throw config_error(std::string(who) + ": non-finite time");
}

void require_in_domain(const TimeDepGenerator& g, double u, double v,
                       const char* who) {
  require_time_order(u, v, who);
  const double slack = 1e-9 * (1.0 + std::abs(g.t2 - g.t1));
  if (v < g.t1 - slack || u > g.t2 + slack)
    throw config_error(std::string(who) + ": [v, u] outside generator domain");
}

int even_panels(int points) {
  if (points < 2) throw config_error("quadrature needs at least 2 panels");
  return points % 2 == 0 ? points : points + 1;
}

}  // namespace

Mat TimeDepGenerator::eval(double t) const {
  switch (rep) {
    case Rep::constant:
      return coeffs[0];
    case Rep::poly: {
      // Horner over matrix coefficients
      Mat acc = coeffs.back();
      for (size_t k = coeffs.size() - 1; k-- > 0;) acc = acc * t + coeffs[k];
      return acc;
    }
    case Rep::trig: {
      const int m = int(coeffs.size() / 2);
      Mat acc = Mat::Zero(dim, dim);
      for (int k = -m; k <= m; ++k)
        acc += coeffs[size_t(k + m)] *
               std::exp(cxd(0.0, 2.0 * kPi * k * t / period));
      return acc;
    }
    case Rep::tabulated: {
      if (t <= sample_times.front()) return samples.front();
      if (t >= sample_times.back()) return samples.back();
      const auto it = std::upper_bound(sample_times.begin(), sample_times.end(), t);
      const size_t j = size_t(it - sample_times.begin());
      const double w =
          (t - sample_times[j - 1]) / (sample_times[j] - sample_times[j - 1]);
      return (1.0 - w) * samples[j - 1] + w * samples[j];
    }
  }
  throw config_error("TimeDepGenerator: bad rep");
}

Mat TimeDepGenerator::deriv(double t) const {
  switch (rep) {
    case Rep::constant:
      return Mat::Zero(dim, dim);
    case Rep::poly: {
      Mat acc = Mat::Zero(dim, dim);
      for (size_t k = coeffs.size(); k-- > 1;)
        acc = acc * t + double(k) * coeffs[k];
      return acc;
    }
    case Rep::trig: {
      const int m = int(coeffs.size() / 2);
      Mat acc = Mat::Zero(dim, dim);
      for (int k = -m; k <= m; ++k)
        acc += coeffs[size_t(k + m)] * cxd(0.0, 2.0 * kPi * k / period) *
               std::exp(cxd(0.0, 2.0 * kPi * k * t / period));
      return acc;
    }
    case Rep::tabulated:
      throw config_error("TimeDepGenerator::deriv: undefined for tabulated data");
  }
  throw config_error("TimeDepGenerator: bad rep");
}

double TimeDepGenerator::c0_norm(int grid_points) const {
  if (grid_points < 2) throw config_error("c0_norm: grid too small");
  double best = 0.0;
  for (int i = 0; i < grid_points; ++i) {
    const double t = t1 + (t2 - t1) * double(i) / double(grid_points - 1);
    best = std::max(best, spectral_norm(eval(t)));
  }
  return best;
}

double TimeDepGenerator::c0_bound() const {
  switch (rep) {
    case Rep::constant:
      return spectral_norm(coeffs[0]);
    case Rep::poly: {
      const double M = std::max(std::abs(t1), std::abs(t2));
      double sum = 0.0, p = 1.0;
      for (const Mat& c : coeffs) {
        sum += spectral_norm(c) * p;
        p *= M;
      }
      return sum;
    }
    case Rep::trig: {
      double sum = 0.0;
      for (const Mat& c : coeffs) sum += spectral_norm(c);
      return sum;
    }
    case Rep::tabulated: {
      // piecewise-linear in t, and norms are convex along segments, so the
      // sup sits on a node
      double best = 0.0;
      for (const Mat& s : samples) best = std::max(best, spectral_norm(s));
      return best;
    }
  }
  throw config_error("TimeDepGenerator: bad rep");
}

double TimeDepGenerator::lipschitz() const {
  switch (rep) {
    case Rep::constant:
      return 0.0;
    case Rep::poly: {
      const double M = std::max(std::abs(t1), std::abs(t2));
      double sum = 0.0;
      for (size_t k = 1; k < coeffs.size(); ++k)
        sum += double(k) * spectral_norm(coeffs[k]) * std::pow(M, double(k - 1));
      return sum;
    }
    case Rep::trig: {
      const int m = int(coeffs.size() / 2);
      double sum = 0.0;
      for (int k = -m; k <= m; ++k)
        sum += std::abs(2.0 * kPi * k / period) * spectral_norm(coeffs[size_t(k + m)]);
      return sum;
    }
    case Rep::tabulated:
      throw config_error("TimeDepGenerator::lipschitz: undefined for tabulated data");
  }
  throw config_error("TimeDepGenerator: bad rep");
}

namespace {

void check_coeffs(const std::vector<Mat>& coeffs, const char* who) {
  if (coeffs.empty()) throw config_error(std::string(who) + ": no coefficients");
  const Eigen::Index d = coeffs[0].rows();
  for (const Mat& c : coeffs) {
    if (c.rows() != d || c.cols() != d)
      throw config_error(std::string(who) + ": coefficient shape mismatch");
    if (!c.allFinite())
      throw config_error(std::string(who) + ": non-finite coefficient");
  }
}

}  // namespace

TimeDepGenerator constant_generator(const Mat& K0, double t1, double t2) {
  check_coeffs({K0}, "constant_generator");
  if (!(t1 < t2)) throw config_error("constant_generator: need t1 < t2");
  TimeDepGenerator g;
  g.rep = TimeDepGenerator::Rep::constant;
  g.t1 = t1;
  g.t2 = t2;
  g.dim = K0.rows();
  g.coeffs = {K0};
  return g;
}

TimeDepGenerator poly_generator(std::vector<Mat> coeffs, double t1, double t2) {
  check_coeffs(coeffs, "poly_generator");
  if (!(t1 < t2)) throw config_error("poly_generator: need t1 < t2");
  TimeDepGenerator g;
  g.rep = TimeDepGenerator::Rep::poly;
  g.t1 = t1;
  g.t2 = t2;
  g.dim = coeffs[0].rows();
  g.coeffs = std::move(coeffs);
  return g;
}

TimeDepGenerator trig_generator(std::vector<Mat> coeffs, double period,
                                double t1, double t2) {
  check_coeffs(coeffs, "trig_generator");
  if (coeffs.size() % 2 != 1)
    throw config_error("trig_generator: need an odd number of coefficients "
                       "(k = -m..m)");
  if (!(period > 0)) throw config_error("trig_generator: period must be > 0");
  if (!(t1 < t2)) throw config_error("trig_generator: need t1 < t2");
  TimeDepGenerator g;
  g.rep = TimeDepGenerator::Rep::trig;
  g.t1 = t1;
  g.t2 = t2;
  g.dim = coeffs[0].rows();
  g.coeffs = std::move(coeffs);
  g.period = period;
  return g;
}

TimeDepGenerator tabulated_generator(std::vector<double> times,
                                     std::vector<Mat> samples) {
  if (times.size() < 2 || times.size() != samples.size())
    throw config_error("tabulated_generator: need >= 2 matching nodes");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1]))
      throw config_error("tabulated_generator: times must strictly increase");
  check_coeffs(samples, "tabulated_generator");
  TimeDepGenerator g;
  g.rep = TimeDepGenerator::Rep::tabulated;
  g.t1 = times.front();
  g.t2 = times.back();
  g.dim = samples[0].rows();
  g.sample_times = std::move(times);
  g.samples = std::move(samples);
  return g;
}

Mat expm(const Mat& K, double t) {
  if (!K.allFinite() || !std::isfinite(t))
    throw config_error("expm: non-finite input");
  if (K.rows() != K.cols()) throw config_error("expm: matrix must be square");
  return Mat(K * t).exp();
}

Operator expm(const Operator& K, double t) {
  return Operator(expm(K.entries, t), K.norm_kind);
}

Mat propagate(const TimeDepGenerator& gen, double u, double v, int steps) {
  require_in_domain(gen, u, v, "propagate");
  if (steps < 1) throw config_error("propagate: steps must be >= 1");
  if (u == v) return Mat::Identity(gen.dim, gen.dim);
  if (gen.rep == TimeDepGenerator::Rep::constant)
    return expm(gen.coeffs[0], u - v);

  const double h = (u - v) / steps;
  Mat F = Mat::Identity(gen.dim, gen.dim);
  for (int l = 0; l < steps; ++l) {
    const double mid = v + (l + 0.5) * h;
    F = expm(gen.eval(mid), h) * F;  // later slices act from the left
  }
  return F;
}

Mat propagate_adaptive(const TimeDepGenerator& gen, double u, double v,
                       double tol, int initial_steps, int max_steps) {
  require_in_domain(gen, u, v, "propagate_adaptive");
  if (u == v || gen.rep == TimeDepGenerator::Rep::constant)
    return propagate(gen, u, v, 1);
  int steps = std::max(1, initial_steps);
  Mat F = propagate(gen, u, v, steps);
  while (steps <= max_steps / 2) {
    steps *= 2;
    Mat F2 = propagate(gen, u, v, steps);
    if (spectral_norm(F2 - F) <= tol) return F2;
    F = std::move(F2);
  }
  throw numeric_error("propagate_adaptive: step doubling did not reach tolerance");
}

Mat Propagator::operator()(double u, double v) const {
  if (solver == Solver::exact_constant) {
    if (generator.rep != TimeDepGenerator::Rep::constant)
      throw config_error("Propagator: exact_constant solver needs a constant "
                         "generator");
    return propagate(generator, u, v, 1);
  }
  const int steps =
      std::max(1, int(std::ceil(steps_per_unit_time * (u - v))));
  return propagate(generator, u, v, steps);
}

Mat picard_term(const TimeDepGenerator& gen, int l, double u, double v,
                int quad_points, int max_order) {
  require_in_domain(gen, u, v, "picard_term");
  if (l < 0) throw config_error("picard_term: order must be >= 0");
  if (l > max_order)
    throw config_error("picard_term: order exceeds cap " +
                       std::to_string(max_order));
  const Eigen::Index d = gen.dim;
  if (l == 0) return Mat::Identity(d, d);
  if (u == v) return Mat::Zero(d, d);

  // One shared grid; each level is a cumulative pairwise-Simpson integral of
  // K(s) * previous_level(s), so every node stays O(h^4) accurate.
  const int N = even_panels(quad_points);
  const double h = (u - v) / N;
  std::vector<Mat> K(N + 1);
  for (int i = 0; i <= N; ++i) K[size_t(i)] = gen.eval(v + i * h);

  std::vector<Mat> level(N + 1, Mat::Identity(d, d));
  std::vector<Mat> next(N + 1);
  for (int j = 1; j <= l; ++j) {
    std::vector<Mat> f(N + 1);
    for (int i = 0; i <= N; ++i) f[size_t(i)] = K[size_t(i)] * level[size_t(i)];
    next[0] = Mat::Zero(d, d);
    for (int k = 0; k + 2 <= N; k += 2) {
      next[size_t(k + 1)] =
          next[size_t(k)] +
          (h / 12.0) * (5.0 * f[size_t(k)] + 8.0 * f[size_t(k + 1)] - f[size_t(k + 2)]);
      next[size_t(k + 2)] =
          next[size_t(k)] +
          (h / 3.0) * (f[size_t(k)] + 4.0 * f[size_t(k + 1)] + f[size_t(k + 2)]);
    }
    level.swap(next);
  }
  return level[size_t(N)];
}

double picard_tail_bound(double c0_norm, double u, double v, int k) {
  require_time_order(u, v, "picard_tail_bound");
  if (k < 0) throw config_error("picard_tail_bound: k must be >= 0");
  if (c0_norm < 0) throw config_error("picard_tail_bound: negative norm");
  const double x = (u - v) * c0_norm;
  return std::pow(x, double(k)) * std::exp(x);
}

Mat trotter_product(const Mat& K1, const Mat& K2, double t, int n) {
  if (n < 1) throw config_error("trotter_product: n must be >= 1");
  if (K1.rows() != K2.rows() || K1.cols() != K2.cols())
    throw config_error("trotter_product: shape mismatch");
  const Mat S = expm(K1, t / n) * expm(K2, t / n);
  // powers of one matrix commute, so binary exponentiation is safe
  Mat result = Mat::Identity(S.rows(), S.cols());
  Mat base = S;
  for (int e = n; e > 0; e /= 2) {
    if (e % 2 == 1) result = result * base;
    if (e > 1) base = base * base;
  }
  return result;
}

double product_difference_bound(const std::vector<double>& norm_caps, double N,
                                const std::vector<double>& term_gaps) {
  if (norm_caps.size() != term_gaps.size())
    throw config_error("product_difference_bound: list length mismatch");
  double cap_sum = 0.0, gap_sum = 0.0;
  for (double m : norm_caps) cap_sum += m;
  for (double g : term_gaps) {
    if (g < 0) throw config_error("product_difference_bound: negative gap");
    gap_sum += g;
  }
  return N * std::exp(cap_sum) * gap_sum;
}

std::vector<double> uniform_grid(double a, double b, int points) {
  if (points < 2) throw config_error("uniform_grid: need at least 2 points");
  std::vector<double> g(static_cast<size_t>(points));
  for (int i = 0; i < points; ++i)
    g[size_t(i)] = a + (b - a) * double(i) / double(points - 1);
  return g;
}

double simpson_real(const std::function<double(double)>& f, double a, double b,
                    int points) {
  if (a == b) return 0.0;
  const int N = even_panels(points);
  const double h = (b - a) / N;
  double sum = f(a) + f(b);
  for (int i = 1; i < N; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * h / 3.0;
}

Mat simpson_matrix(const std::function<Mat(double)>& f, double a, double b,
                   int points) {
  const int N = even_panels(points);
  const double h = (b - a) / N;
  Mat sum = f(a) + f(b);
  if (a == b) return Mat::Zero(sum.rows(), sum.cols());
  for (int i = 1; i < N; ++i) sum += f(a + i * h) * (i % 2 == 1 ? 4.0 : 2.0);
  return sum * (h / 3.0);
}

BoundAndMeasured perturbation_bound(const TimeDepGenerator& genK,
                                    const TimeDepGenerator& genL, double u,
                                    double v,
                                    const std::function<double(double)>& omega,
                                    int quad_points) {
  require_in_domain(genK, u, v, "perturbation_bound");
  require_in_domain(genL, u, v, "perturbation_bound");
  if (genK.dim != genL.dim)
    throw config_error("perturbation_bound: dimension mismatch");

  // the dominating function must actually dominate both growth bounds
  const int check_points = 129;
  for (int i = 0; i < check_points; ++i) {
    const double s = v + (u - v) * double(i) / double(check_points - 1);
    const double wk = weak_growth_bound(Operator(genK.eval(s)));
    const double wl = weak_growth_bound(Operator(genL.eval(s)));
    if (omega(s) + 1e-10 < std::max(wk, wl))
      throw config_error("perturbation_bound: omega fails to dominate the weak "
                         "growth bounds at s = " + std::to_string(s));
  }

  BoundAndMeasured r;
  const double omega_int = simpson_real(omega, v, u, quad_points);
  const double gap_int = simpson_real(
      [&](double s) { return spectral_norm(genK.eval(s) - genL.eval(s)); }, v, u,
      quad_points);
  r.bound = std::exp(omega_int) * gap_int;
  r.measured = spectral_norm(propagate_adaptive(genK, u, v, 1e-10) -
                             propagate_adaptive(genL, u, v, 1e-10));
  return r;
}

BoundAndMeasured propagator_growth_check(const TimeDepGenerator& gen, double u,
                                         double v, int quad_points) {
  require_in_domain(gen, u, v, "propagator_growth_check");
  BoundAndMeasured r;
  r.measured = spectral_norm(propagate_adaptive(gen, u, v, 1e-10));
  const double omega_int = simpson_real(
      [&](double s) { return weak_growth_bound(Operator(gen.eval(s))); }, v, u,
      quad_points);
  r.bound = std::exp(omega_int);
  return r;
}

double interleaving_bound_F4(const F4Majorants& f, double u, double v, double w) {
  if (!(w <= v && v <= u))
    throw config_error("interleaving_bound_F4: need w <= v <= u");
  const double g = f.f_KM(u - v) + f.f_M(v - w);
  const double h = f.f_K(u - v) + f.f_M(u - w);
  return g * g * std::exp(g) + h * h * std::exp(h);
}

}  // namespace zlab
