#pragma once

// Interleaved products of a split contraction with a time-ordered propagator,
// their isometrically corrected form, the limit dynamics on the invariant
// block, and evaluators for the product-error bounds.

#include "zlab/ergodic.hpp"
#include "zlab/linops.hpp"
#include "zlab/propagate.hpp"

#include <optional>
#include <utility>

namespace zlab {

// One row of a convergence experiment: the control parameter (a product
// length n, or a time-scale gamma), the measured deviation, and an a-priori
// bound when one applies to the instance.
struct ErrorCurveRow {
  double control = 0.0;
  double measured = 0.0;
  std::optional<double> bound;
};

using ErrorCurve = std::vector<ErrorCurveRow>;

// A full problem instance: the split contraction T = T_I (+) T_C, the
// generator K(t) on [t1, t2], the averaging schedule fixing the partition
// rho_{n,l}, and the sample times at which products are compared.
struct ZenoInstance {
  SplitContraction split;
  TimeDepGenerator gen;
  Schedule schedule;
  double t1 = 0.0;
  double t2 = 1.0;
  std::vector<double> s_grid;
};

ZenoInstance make_zeno_instance(SplitContraction split, TimeDepGenerator gen,
                                Schedule schedule, std::vector<double> s_grid);

// Everything the product-error bounds consume, assembled once per (n, s):
// C0 caps of the generator and its compressions, the contraction weight
// tau_C, the single-slice growth cap Lambda, the interval growth cap Omega,
// and the widest slice width of the reparametrized partition.
struct BoundParams {
  double k_K = 0.0;             // sup_t ||K(t)||
  double k_P = 0.0;             // sup_t ||P K(t) P||
  double k_0 = 0.0;             // sup_t ||P K(t) (1 - P)||
  double tau_C = 1.0;           // (1 + ||T_C||) / (1 - ||T_C||); 1 if X_C empty
  double Lambda = 1.0;          // exp(int |omega| * max_l alpha_{n,l})
  double Omega = 1.0;           // exp(int omega)
  double partition_norm = 0.0;  // (s - t1) * max_l alpha_{n,l}
  double contraction_norm = 0.0;
};

// omega(t) is the larger of the weak growth bounds of K(t) and of P K(t) P
// (embedded); integrals run over [t1, s] on a Simpson grid.
BoundParams make_bound_params(const ZenoInstance& inst, int n, double s,
                              int grid_points = 513);

// prod_{l=0}^{n-1} T F(rho_{n,l+1}(s), rho_{n,l}(s)), new factors applied
// from the left. Each slice propagator starts at 8 substeps, doubled until
// its self-discrepancy is below 1e-9 * slice width.
Mat zeno_product(const ZenoInstance& inst, int n, double s);

// The same product with (T_I^{-n} (+) 1_C) applied from the left, undoing
// the rotation of the invariant block.
Mat corrected_zeno_product(const ZenoInstance& inst, int n, double s);

// The averaged generator of the invariant-block dynamics, as a dim_I x dim_I
// generator in the decomposition basis: the mean of the compression of K
// over the conjugation orbit of T_I. Closed-form pinching for constant /
// polynomial / trigonometric generators; tabulated data goes through the
// discrete mean and fails if that does not converge.
TimeDepGenerator zeno_mean_block_generator(const ZenoInstance& inst);

// G(s, t1): the solution of the averaged initial value problem on the
// invariant block, embedded into the full space (zero on X_C).
Mat zeno_limit(const ZenoInstance& inst, double s);

// Rows (n, sup over s_grid of ||corrected product - G||, bound). The bound
// column is filled when the isometric block is the identity, where the
// interleaved-product estimate applies verbatim.
ErrorCurve zeno_error_curve(const ZenoInstance& inst,
                            const std::vector<int>& n_grid);

// n Omega |T|^2 f ||Px|| + Omega |T| g ||(1-P)x|| with
//   f = Lambda (k_K^2 e^{k_K |T|} + k_P^2 e^{k_P |T|})
//   g = Lambda k_0 e^{k_0 |T|}
// — the vector-level estimate for projective interruption.
double zeno_bound_projective(const BoundParams& params, int n,
                             std::pair<double, double> x_split_norms);

// n Omega |T|^2 h + Omega |T| h_1 + Omega ||T_C||^n with
//   h   = Lambda (k_K^2 e^{k_K |T|} (1 + tau_C e^{k_K |T|}) + k_P^2 e^{k_P |T|})
//   h_1 = tau_C Lambda e^{k_P |T|}
// — the operator-level estimate for a split contraction.
double zeno_bound_contraction(const BoundParams& params, int n);

// Decomposition K = M + L - U^{-1} L U with [M, U] = 0, which certifies an
// O(1/n) rate for the corrected kick products.
struct KickWitness {
  Mat M;
  Mat L;
};

// Errors ||U^{-n} (U exp(K t/n))^n - exp(mean t)|| against the pinched mean
// of K over U. With a witness, each row also carries the rate bound
//   e^{w t} (||M|| + 2||L||)^2 (2 t^2 / n) e^{(|w| + ||M|| + 2||L||) t / n},
// w being the larger weak growth bound of K and M.
ErrorCurve single_kick_experiment(const Operator& U, const Operator& K,
                                  double t, const std::vector<int>& n_grid,
                                  const std::optional<KickWitness>& witness = {});

}  // namespace zlab
