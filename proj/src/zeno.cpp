#include "zlab/zeno.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

namespace zlab {

namespace {

Mat mat_pow(Mat base, long long n) {
  Mat acc = Mat::Identity(base.rows(), base.cols());
  while (n > 0) {
    if (n & 1) acc = base * acc;
    base = base * base;
    n >>= 1;
  }
  return acc;
}

void require_time(const ZenoInstance& inst, double s, const char* who) {
  const double slack = 1e-9 * (1.0 + std::abs(inst.t2 - inst.t1));
  if (!(s >= inst.t1 - slack && s <= inst.t2 + slack))
    throw config_error(std::string(who) + ": s = " + std::to_string(s) +
                       " outside [" + std::to_string(inst.t1) + ", " +
                       std::to_string(inst.t2) + "]");
}

// gammas[l] = alpha_{n,0} + ... + alpha_{n,l-1}, so the slice times are
// t1 + (s - t1) gammas[l].
std::vector<double> cumulative_gammas(const Schedule& schedule, int n) {
  const auto alpha = schedule.row(n);
  std::vector<double> g(alpha.size() + 1, 0.0);
  for (size_t l = 0; l < alpha.size(); ++l) g[l + 1] = g[l] + alpha[l];
  return g;
}

// Slice propagator with the step-doubling contract: the self-discrepancy is
// pushed below 1e-9 * slice width so integrator error stays out of the
// bound-domination margins.
Mat slice_propagator(const TimeDepGenerator& gen, double u, double v) {
  if (u == v) return Mat::Identity(gen.dim, gen.dim);
  if (gen.rep == TimeDepGenerator::Rep::constant)
    return propagate(gen, u, v, 1);
  const double target = 1e-9 * (u - v);
  int steps = 8;
  Mat coarse = propagate(gen, u, v, steps);
  while (steps <= (1 << 22)) {
    Mat fine = propagate(gen, u, v, 2 * steps);
    if (spectral_norm(coarse - fine) <= target) return fine;
    coarse = std::move(fine);
    steps *= 2;
  }
  throw numeric_error("zeno_product: slice propagator did not settle");
}

Mat embed_invariant_block(const BlockDecomposition& dec, const Mat& block) {
  Mat full = Mat::Zero(dec.dim_I + dec.dim_C, dec.dim_I + dec.dim_C);
  full.topLeftCorner(dec.dim_I, dec.dim_I) = block;
  return dec.basis * full * dec.basis.adjoint();
}

}  // namespace

ZenoInstance make_zeno_instance(SplitContraction split, TimeDepGenerator gen,
                                Schedule schedule,
                                std::vector<double> s_grid) {
  if (gen.dim != split.T.dim())
    throw config_error("make_zeno_instance: generator dimension " +
                       std::to_string(gen.dim) + " does not match T");
  if (split.decomposition.dim_I < 1)
    throw config_error("make_zeno_instance: invariant block is empty");
  if (s_grid.empty())
    throw config_error("make_zeno_instance: empty s grid");

  ZenoInstance inst;
  inst.t1 = gen.t1;
  inst.t2 = gen.t2;
  for (double s : s_grid) require_time(inst, s, "make_zeno_instance");
  inst.split = std::move(split);
  inst.gen = std::move(gen);
  inst.schedule = std::move(schedule);
  inst.s_grid = std::move(s_grid);
  return inst;
}

Mat zeno_product(const ZenoInstance& inst, int n, double s) {
  if (n < 1) throw config_error("zeno_product: n must be >= 1");
  require_time(inst, s, "zeno_product");

  const auto gammas = cumulative_gammas(inst.schedule, n);
  const Mat& T = inst.split.T.entries;
  Mat prod = Mat::Identity(T.rows(), T.cols());
  for (int l = 0; l < n; ++l) {
    const double v = inst.t1 + (s - inst.t1) * gammas[size_t(l)];
    const double u = inst.t1 + (s - inst.t1) * gammas[size_t(l) + 1];
    prod = T * slice_propagator(inst.gen, u, v) * prod;
  }
  return prod;
}

Mat corrected_zeno_product(const ZenoInstance& inst, int n, double s) {
  const auto& dec = inst.split.decomposition;
  Mat blk = Mat::Identity(dec.dim_I + dec.dim_C, dec.dim_I + dec.dim_C);
  blk.topLeftCorner(dec.dim_I, dec.dim_I) =
      mat_pow(inst.split.T_I.adjoint(), n);
  return dec.basis * blk * dec.basis.adjoint() * zeno_product(inst, n, s);
}

TimeDepGenerator zeno_mean_block_generator(const ZenoInstance& inst) {
  const auto& dec = inst.split.decomposition;
  const Mat& B = dec.basis;
  const auto compress = [&](const Mat& C) {
    return Mat((B.adjoint() * C * B).topLeftCorner(dec.dim_I, dec.dim_I));
  };

  TimeDepGenerator blocked = inst.gen;
  blocked.dim = dec.dim_I;
  if (inst.gen.rep != TimeDepGenerator::Rep::tabulated) {
    for (Mat& c : blocked.coeffs) c = compress(c);
    return ergodic_mean_pinching(blocked, Operator(inst.split.T_I));
  }

  // Tabulated data has no coefficient form to pinch; run the discrete mean
  // on a fixed grid and interpolate through its values.
  for (Mat& m : blocked.samples) m = compress(m);
  const auto mean =
      ergodic_mean_discrete(blocked, Operator(inst.split.T_I), inst.schedule,
                            uniform_grid(inst.t1, inst.t2, 257), 1e-8);
  if (!mean.converged)
    throw numeric_error(
        "zeno_mean_block_generator: discrete mean did not converge; "
        "limit unavailable");
  return tabulated_generator(mean.s_grid, mean.values);
}

Mat zeno_limit(const ZenoInstance& inst, double s) {
  require_time(inst, s, "zeno_limit");
  const auto mean_gen = zeno_mean_block_generator(inst);
  return embed_invariant_block(inst.split.decomposition,
                               propagate_adaptive(mean_gen, s, inst.t1, 1e-10));
}

ErrorCurve zeno_error_curve(const ZenoInstance& inst,
                            const std::vector<int>& n_grid) {
  if (n_grid.empty()) throw config_error("zeno_error_curve: empty n grid");
  const auto mean_gen = zeno_mean_block_generator(inst);
  std::vector<Mat> limits;
  limits.reserve(inst.s_grid.size());
  for (double s : inst.s_grid)
    limits.push_back(
        embed_invariant_block(inst.split.decomposition,
                              propagate_adaptive(mean_gen, s, inst.t1, 1e-10)));

  // The interleaved-product bound compares against the plain compressed
  // dynamics, which coincides with the limit exactly when the isometric
  // block is trivial.
  const Eigen::Index dI = inst.split.decomposition.dim_I;
  const bool identity_block =
      spectral_norm(Mat(inst.split.T_I - Mat::Identity(dI, dI))) <= 1e-12;

  ErrorCurve curve;
  curve.reserve(n_grid.size());
  for (int n : n_grid) {
    ErrorCurveRow row;
    row.control = n;
    double worst_bound = 0.0;
    for (size_t i = 0; i < inst.s_grid.size(); ++i) {
      const double s = inst.s_grid[i];
      row.measured =
          std::max(row.measured, spectral_norm(
                                     corrected_zeno_product(inst, n, s) -
                                     limits[i]));
      if (identity_block)
        worst_bound = std::max(
            worst_bound, zeno_bound_contraction(make_bound_params(inst, n, s), n));
    }
    if (identity_block) row.bound = worst_bound;
    curve.push_back(std::move(row));
  }
  return curve;
}

BoundParams make_bound_params(const ZenoInstance& inst, int n, double s,
                              int grid_points) {
  if (n < 1) throw config_error("make_bound_params: n must be >= 1");
  if (grid_points < 3)
    throw config_error("make_bound_params: need at least 3 grid points");
  require_time(inst, s, "make_bound_params");

  const auto& dec = inst.split.decomposition;
  const Eigen::Index dI = dec.dim_I, dC = dec.dim_C;
  const Mat& B = dec.basis;

  const auto blocked_eval = [&](double t) {
    return Mat(B.adjoint() * inst.gen.eval(t) * B);
  };
  const auto omega_at = [&](double t) {
    const Mat Kb = blocked_eval(t);
    Mat compressed = Mat::Zero(dI + dC, dI + dC);
    compressed.topLeftCorner(dI, dI) = Kb.topLeftCorner(dI, dI);
    return std::max(weak_growth_bound(Operator(Kb)),
                    weak_growth_bound(Operator(compressed)));
  };

  BoundParams p;
  for (double t : uniform_grid(inst.t1, s, grid_points)) {
    const Mat Kb = blocked_eval(t);
    p.k_K = std::max(p.k_K, spectral_norm(Kb));
    p.k_P = std::max(p.k_P, spectral_norm(Kb.topLeftCorner(dI, dI)));
    if (dC > 0)
      p.k_0 = std::max(p.k_0, spectral_norm(Kb.topRightCorner(dI, dC)));
  }

  const double max_alpha = schedule_diagnostics(inst.schedule, n).max_alpha;
  p.partition_norm = (s - inst.t1) * max_alpha;
  p.Omega = std::exp(simpson_real(omega_at, inst.t1, s, grid_points));
  p.Lambda = std::exp(
      simpson_real([&](double t) { return std::abs(omega_at(t)); }, inst.t1, s,
                   grid_points) *
      max_alpha);
  p.contraction_norm = inst.split.contraction_norm;
  p.tau_C = dC > 0 ? (1.0 + p.contraction_norm) / (1.0 - p.contraction_norm)
                   : 1.0;
  return p;
}

double zeno_bound_projective(const BoundParams& params, int n,
                             std::pair<double, double> x_split_norms) {
  if (n < 1) throw config_error("zeno_bound_projective: n must be >= 1");
  const double w = params.partition_norm;
  const double f =
      params.Lambda * (params.k_K * params.k_K * std::exp(params.k_K * w) +
                       params.k_P * params.k_P * std::exp(params.k_P * w));
  const double g = params.Lambda * params.k_0 * std::exp(params.k_0 * w);
  return double(n) * params.Omega * w * w * f * x_split_norms.first +
         params.Omega * w * g * x_split_norms.second;
}

double zeno_bound_contraction(const BoundParams& params, int n) {
  if (n < 1) throw config_error("zeno_bound_contraction: n must be >= 1");
  if (params.contraction_norm >= 1.0)
    throw config_error("zeno_bound_contraction: ||T_C|| must be < 1");
  const double w = params.partition_norm;
  const double ekK = std::exp(params.k_K * w);
  const double h =
      params.Lambda *
      (params.k_K * params.k_K * ekK * (1.0 + params.tau_C * ekK) +
       params.k_P * params.k_P * std::exp(params.k_P * w));
  const double h1 = params.tau_C * params.Lambda * std::exp(params.k_P * w);
  return double(n) * params.Omega * w * w * h + params.Omega * w * h1 +
         params.Omega * std::pow(params.contraction_norm, n);
}

ErrorCurve single_kick_experiment(const Operator& U, const Operator& K,
                                  double t, const std::vector<int>& n_grid,
                                  const std::optional<KickWitness>& witness) {
  const Eigen::Index d = U.dim();
  if (U.entries.cols() != d || K.entries.rows() != d || K.entries.cols() != d)
    throw config_error("single_kick_experiment: dimension mismatch");
  if (spectral_norm(Mat(U.entries.adjoint() * U.entries) -
                    Mat::Identity(d, d)) > 1e-10)
    throw config_error("single_kick_experiment: U is not unitary");
  if (n_grid.empty())
    throw config_error("single_kick_experiment: empty n grid");
  if (!(t > 0)) throw config_error("single_kick_experiment: t must be > 0");

  const Mat Uadj = U.entries.adjoint();
  double rate_w = 0.0;
  double mass = 0.0;
  if (witness) {
    const Mat& M = witness->M;
    const Mat& L = witness->L;
    if (M.rows() != d || M.cols() != d || L.rows() != d || L.cols() != d)
      throw config_error("single_kick_experiment: witness dimension mismatch");
    if (spectral_norm(Mat(M + L - Uadj * L * U.entries) - K.entries) > 1e-10)
      throw config_error(
          "single_kick_experiment: witness does not recompose the generator");
    if (spectral_norm(Mat(M * U.entries - U.entries * M)) > 1e-10)
      throw config_error(
          "single_kick_experiment: witness M does not commute with U");
    rate_w = std::max(weak_growth_bound(Operator(K.entries)),
                      weak_growth_bound(Operator(M)));
    mass = spectral_norm(M) + 2.0 * spectral_norm(L);
  }

  const Mat limit = expm(pinch(K, spectral_resolution(U)).entries, t);

  ErrorCurve curve;
  curve.reserve(n_grid.size());
  for (int n : n_grid) {
    if (n < 1) throw config_error("single_kick_experiment: n must be >= 1");
    const Mat step = U.entries * expm(K.entries, t / n);
    ErrorCurveRow row;
    row.control = n;
    row.measured =
        spectral_norm(Mat(mat_pow(Uadj, n) * mat_pow(step, n)) - limit);
    if (witness)
      row.bound = std::exp(rate_w * t) * mass * mass * (2.0 * t * t / n) *
                  std::exp((std::abs(rate_w) + mass) * t / n);
    curve.push_back(row);
  }
  return curve;
}

}  // namespace zlab
