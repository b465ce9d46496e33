#pragma once

// Propagators for generators gamma A + K(t) with a fast skew-Hermitian
// rotation on an invariant block and strict decay on its complement, the
// large-gamma limit dynamics (rotation times pinched-mean evolution), and
// evaluators for the associated convergence estimates.

#include "zlab/linops.hpp"
#include "zlab/propagate.hpp"
#include "zlab/zeno.hpp"

#include <optional>
#include <vector>

namespace zlab {

// A = A_I (+) A_C in the basis of the decomposition, with A_I skew-Hermitian
// (it generates the fast unitary rotation on X_I) and A_C strictly
// dissipative: w_C = lambda_max((A_C + A_C^*)/2) < 0, so ||exp(A_C v)|| <=
// exp(w_C v). K(t) is the slow drive on [t1, t2]. w_C is -infinity when X_C
// is empty.
struct AdiabaticInstance {
  BlockDecomposition decomposition;
  Operator A;
  Mat A_I;
  Mat A_C;
  double w_C = 0.0;
  TimeDepGenerator gen;
  double t1 = 0.0;
  double t2 = 1.0;
  std::vector<double> gamma_grid;
};

// Validates the split (block-diagonality of A, skewness of A_I, strict decay
// of the A_C semigroup against sampled exponentials) and copies the drive's
// time window. gamma_grid entries must be positive.
AdiabaticInstance make_adiabatic_instance(const Operator& A,
                                          const BlockDecomposition& dec,
                                          TimeDepGenerator gen,
                                          std::vector<double> gamma_grid);

// Constants of the closed-form convergence estimate for constant drives:
// M_A and p cap the undriven semigroup via ||F(t)|| <= M_A and
// ||F(t) P_C|| <= exp(-eta t) p(t), with p(s) = sum_k p_poly[k] s^k a
// positive polynomial; c_AB is the leading constant of the estimate, which
// is not computable from the instance and must be supplied by the caller.
struct AdiabaticBoundParams {
  double M_A = 1.0;
  double eta = 1.0;
  std::vector<double> p_poly = {1.0};
  double c_AB = 1.0;
};

// F_gamma(t, t1), the time-ordered propagator of u -> gamma A + K(u), for
// t in (t1, t2]. steps <= 0 picks ceil(64 gamma (t - t1)) substeps so the
// resolution tracks the fast rotation (constant drives are exponentiated
// exactly in one step); a budget above max_steps is refused.
Mat adiabatic_propagator(const AdiabaticInstance& inst, double gamma, double t,
                         long steps = 0, long max_steps = 1L << 22);

// The drive compressed to the invariant block and pinched by the spectral
// resolution of A_I: u -> sum_lambda P_lambda (B_I^* K(u) B_I) P_lambda,
// applied coefficient-wise (sample-wise for tabulated data). This generates
// the limit dynamics G on X_I.
TimeDepGenerator adiabatic_mean_block_generator(const AdiabaticInstance& inst);

// The limit object T_I(gamma (t - t1)) G(t, t1) embedded in the full space:
// the fast rotation over the elapsed window times the pinched-mean
// evolution, zero on X_C.
Mat adiabatic_limit(const AdiabaticInstance& inst, double gamma, double t);

// Rows (gamma, ||F_gamma(t, t1) - limit||, bound). The bound column is
// filled only when params are supplied and the drive is constant; the
// closed-form estimate covers exactly that case. gamma_grid must be strictly
// increasing.
ErrorCurve adiabatic_error_curve(
    const AdiabaticInstance& inst, double t,
    const std::optional<AdiabaticBoundParams>& params = {});

// Closed-form estimate for || exp((gamma A + B) t) -
// P_I exp(gamma A t) exp(P[B] t) ||, with P[B] the pinching of B by the
// spectral projections of A onto its imaginary-axis eigenvalues:
//
//   c_AB (M_A + 1)/gamma * [x e^{tx} - y e^{ty}] / [x - y]
//     + M_A e^{M_A ||B||}/gamma * int_0^inf e^{-eta s} p(s) ds
//     + e^{-gamma t} p(gamma t),
//
// where x = M_A ||B||, y = ||P[B]||. The integral is evaluated in closed
// form (sum_k p_poly[k] k!/eta^{k+1}); the ratio continues to
// e^{tm}(1 + tm), m = (x + y)/2, when x = y. Both gamma^{-1} terms vanish
// for B = 0. When M_A = 1 and p == 1 the two-term self-adjoint form
// 2 c_AB/gamma * [...] + e^{-gamma t} is used instead.
double adiabatic_convergence_bound(const Operator& A, const Operator& B,
                                   const AdiabaticBoundParams& params,
                                   double t, double gamma);

// (2 ||L|| / gamma) e^{2 ||L|| / gamma} + eps t e^{(||K|| + eps) t}: the
// rate estimate obtained from a commutator witness L with residual eps,
// i.e. || (K_I - pinch(K_I)) - [L, A_I] || <= eps for a constant drive.
double adiabatic_witness_bound(double gamma, double norm_L, double eps,
                               double norm_K, double t);

// Solves K' = pinch(K') + [L, A] in the eigenbasis of the skew-Hermitian A:
// L'_{jk} = K'_{jk} / (a_k - a_j) across eigenvalue pairs separated by more
// than degeneracy_tol, zero within clusters. For separated spectra the
// reconstruction is exact.
Mat commutator_witness(const Operator& K, const Operator& A,
                       double degeneracy_tol = 1e-8);

// || group-mean of [L, A] ||: zero exactly when the commutator lies in the
// kernel of the averaging, which is what makes L a usable witness. A must
// be skew-Hermitian; the group element exp(A t_check) is sampled and must
// be unitary.
double group_mean_kernel_witness_check(const Operator& L, const Operator& A,
                                       double t_check);

}  // namespace zlab
