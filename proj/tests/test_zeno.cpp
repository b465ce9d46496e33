#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "zlab/rng.hpp"
#include "zlab/zeno.hpp"

#include <cmath>

using namespace zlab;

namespace {

const cxd I1(0.0, 1.0);

Mat sigma_x() {
  Mat s(2, 2);
  s << 0, 1, 1, 0;
  return s;
}

// T = diag(1, tc) with the first axis as invariant block, K = -i sigma_x
// on [0, 1]. tc = 0 is the projective case, 0 < tc < 1 a strict contraction.
ZenoInstance axis_instance(double tc, const Mat& K0,
                           Schedule schedule = uniform_schedule()) {
  Mat t = Mat::Zero(2, 2);
  t(0, 0) = 1;
  t(1, 1) = tc;
  auto split = validate_split_contraction(Operator(t),
                                          axis_block_decomposition(2, 1));
  return make_zeno_instance(split, constant_generator(K0, 0.0, 1.0),
                            std::move(schedule), {0.3, 1.0});
}

ZenoInstance unitary_instance(const Mat& U, const Mat& K0) {
  const Eigen::Index d = U.rows();
  auto split = validate_split_contraction(Operator(U),
                                          axis_block_decomposition(d, d));
  return make_zeno_instance(split, constant_generator(K0, 0.0, 1.0),
                            uniform_schedule(), {1.0});
}

Mat repeated(const Mat& A, int n) {
  Mat acc = Mat::Identity(A.rows(), A.cols());
  for (int i = 0; i < n; ++i) acc = A * acc;
  return acc;
}

double loglog_slope(const ErrorCurve& curve, double n_min, double n_max) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (const auto& row : curve) {
    if (row.control < n_min || row.control > n_max) continue;
    const double x = std::log(row.control);
    const double y = std::log(row.measured);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++m;
  }
  REQUIRE(m >= 2);
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

}  // namespace

TEST_CASE("products reduce to powers and single factors") {
  const Mat zero2 = Mat::Zero(2, 2);

  SUBCASE("no generator leaves the bare contraction powers") {
    Mat u = Mat::Zero(2, 2);
    u(0, 0) = 1;
    u(1, 1) = I1;
    auto inst = unitary_instance(u, zero2);
    for (int n : {1, 5, 32}) {
      CHECK(spectral_norm(zeno_product(inst, n, 1.0) - repeated(u, n)) <=
            1e-13);
      CHECK(spectral_norm(corrected_zeno_product(inst, n, 1.0) -
                          Mat::Identity(2, 2)) <= 1e-13);
    }
  }

  SUBCASE("n = 1 is one contraction after one propagator") {
    auto inst = axis_instance(0.5, -I1 * sigma_x());
    for (double s : {0.3, 1.0}) {
      const Mat expected =
          inst.split.T.entries * propagate_adaptive(inst.gen, s, 0.0, 1e-12);
      CHECK(spectral_norm(zeno_product(inst, 1, s) - expected) <= 1e-12);
    }
  }

  SUBCASE("argument guards") {
    auto inst = axis_instance(0.5, -I1 * sigma_x());
    CHECK_THROWS_AS(zeno_product(inst, 0, 0.5), config_error);
    CHECK_THROWS_AS(zeno_product(inst, 4, 1.5), config_error);
    CHECK_THROWS_AS(zeno_product(inst, 4, -0.5), config_error);
  }
}

TEST_CASE("instance validation") {
  Mat t = Mat::Zero(2, 2);
  t(0, 0) = 1;
  t(1, 1) = 0.5;
  auto split =
      validate_split_contraction(Operator(t), axis_block_decomposition(2, 1));
  auto gen = constant_generator(-I1 * sigma_x(), 0.0, 1.0);

  CHECK_THROWS_AS(
      make_zeno_instance(split, gen, uniform_schedule(), {0.5, 1.2}),
      config_error);
  CHECK_THROWS_AS(make_zeno_instance(split, gen, uniform_schedule(), {}),
                  config_error);
  CHECK_THROWS_AS(
      make_zeno_instance(
          split, constant_generator(Mat::Zero(3, 3), 0.0, 1.0),
          uniform_schedule(), {0.5}),
      config_error);

  // an empty invariant block (only constructible by hand) has no limit
  // dynamics to speak of
  Mat c = Mat::Zero(2, 2);
  c(0, 0) = 0.3;
  c(1, 1) = 0.4;
  SplitContraction crush;
  crush.decomposition =
      BlockDecomposition{0, 2, Mat::Identity(2, 2),
                         Operator(Mat::Zero(2, 2)), Operator(Mat::Identity(2, 2))};
  crush.T = Operator(c);
  crush.T_I = Mat(0, 0);
  crush.T_C = c;
  crush.contraction_norm = 0.4;
  CHECK_THROWS_AS(make_zeno_instance(crush, gen, uniform_schedule(), {0.5}),
                  config_error);
}

TEST_CASE("projective interruption freezes the complement") {
  auto inst = axis_instance(0.0, -I1 * sigma_x());
  const Mat P = inst.split.decomposition.P_I.entries;

  SUBCASE("frequent interruption pins the product near the projection") {
    double prev = 1.0;
    for (int n : {64, 128, 256}) {
      const double err = spectral_norm(zeno_product(inst, n, 1.0) - P);
      CHECK(err < prev);
      prev = err;
    }
    CHECK(prev <= 0.02);  // ~ 4/n at n = 256
  }

  SUBCASE("vector-level bound dominates for random unit vectors") {
    const int n = 64;
    const Mat prod = zeno_product(inst, n, 1.0);
    const auto params = make_bound_params(inst, n, 1.0);

    // the complement axis is the sharpest direction: the first slice leaks
    // sin(1/n) of it into the invariant block
    Vec e2 = Vec::Zero(2);
    e2(1) = 1;
    const double leak = spectral_norm(Mat(prod * e2 - P * e2));
    CHECK(leak <= zeno_bound_projective(params, n, {0.0, 1.0}) + 1e-8);
    CHECK(leak >= 0.9 * std::sin(1.0 / n));

    Rng rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      Vec x = rng.random_matrix(2, 1).col(0);
      x.normalize();
      const double measured = spectral_norm(Mat(prod * x - P * x));
      const double px = spectral_norm(Mat(P * x));
      const double qx = spectral_norm(Mat(x - P * x));
      CHECK(measured <= zeno_bound_projective(params, n, {px, qx}) + 1e-8);
    }
  }
}

TEST_CASE("corrected unitary kicks reach the pinched propagator") {
  Mat u = Mat::Zero(2, 2);
  u(0, 0) = 1;
  u(1, 1) = I1;
  Mat h(2, 2);
  h << 1, 2, 2, 4;
  auto inst = unitary_instance(u, -I1 * h);

  Mat pinched = Mat::Zero(2, 2);
  pinched(0, 0) = 1;
  pinched(1, 1) = 4;
  const Mat limit = expm(-I1 * pinched, 1.0);

  CHECK(spectral_norm(corrected_zeno_product(inst, 1 << 10, 1.0) - limit) <=
        5e-3);
  CHECK(spectral_norm(zeno_limit(inst, 1.0) - limit) <= 1e-12);
}

TEST_CASE("limit dynamics lives on the invariant block alone") {
  SUBCASE("contraction strength is invisible to the limit") {
    const Mat K0 = -I1 * sigma_x();
    const Mat ref = zeno_limit(axis_instance(0.5, K0), 1.0);
    Mat P = Mat::Zero(2, 2);
    P(0, 0) = 1;
    CHECK(spectral_norm(ref - P) <= 1e-12);  // compressed generator vanishes
    for (double tc : {0.2, 0.8})
      CHECK(spectral_norm(zeno_limit(axis_instance(tc, K0), 1.0) - ref) <=
            1e-12);
  }

  SUBCASE("block-commuting generator exponentiates on the block") {
    Mat u = Mat::Zero(3, 3);
    u(0, 0) = 1;
    u(1, 1) = I1;
    u(2, 2) = 0.5;
    auto split = validate_split_contraction(Operator(u),
                                            axis_block_decomposition(3, 2));
    Mat k = Mat::Zero(3, 3);
    k(0, 0) = -2.0 * I1;
    k(1, 1) = -5.0 * I1;
    k(2, 2) = 0.3;
    auto inst = make_zeno_instance(split, constant_generator(k, 0.0, 1.0),
                                   uniform_schedule(), {0.6});

    Mat expected = Mat::Zero(3, 3);
    expected.topLeftCorner(2, 2) = expm(Mat(k.topLeftCorner(2, 2)), 0.6);
    CHECK(spectral_norm(zeno_limit(inst, 0.6) - expected) <= 1e-12);
  }

  SUBCASE("non-commuting block generator is pinched before exponentiation") {
    Mat u = Mat::Zero(3, 3);
    u(0, 0) = 1;
    u(1, 1) = I1;
    u(2, 2) = 0.5;
    auto split = validate_split_contraction(Operator(u),
                                            axis_block_decomposition(3, 2));
    Mat k = Mat::Zero(3, 3);
    k.topLeftCorner(2, 2) << 1, 2, 3, 4;
    auto inst = make_zeno_instance(split, constant_generator(k, 0.0, 1.0),
                                   uniform_schedule(), {0.7});

    Mat diag = Mat::Zero(3, 3);
    diag(0, 0) = 1;
    diag(1, 1) = 4;
    Mat expected = expm(diag, 0.7);
    expected(2, 2) = 0;
    CHECK(spectral_norm(zeno_limit(inst, 0.7) - expected) <= 1e-10);
  }
}

TEST_CASE("error curves decay at first order with dominating bounds") {
  const std::vector<int> n_grid = {8, 16, 32, 64, 128, 256, 512};

  SUBCASE("projective and contractive instances") {
    for (double tc : {0.0, 0.5}) {
      auto inst = axis_instance(tc, -I1 * sigma_x());
      const auto curve = zeno_error_curve(inst, n_grid);
      REQUIRE(curve.size() == n_grid.size());
      for (size_t i = 0; i < curve.size(); ++i) {
        REQUIRE(curve[i].bound.has_value());  // isometric block is trivial
        CHECK(curve[i].measured <= *curve[i].bound + 1e-8);
        if (i > 0) CHECK(curve[i].measured < curve[i - 1].measured);
      }
      CHECK(loglog_slope(curve, 32, 512) <= -0.9);
    }
  }

  SUBCASE("free evolution with a rotating isometric block") {
    Mat u = Mat::Zero(2, 2);
    u(0, 0) = 1;
    u(1, 1) = I1;
    auto inst = unitary_instance(u, Mat::Zero(2, 2));
    for (const auto& row : zeno_error_curve(inst, {1, 4, 16})) {
      CHECK(row.measured <= 1e-12);
      CHECK_FALSE(row.bound.has_value());
    }
  }

  SUBCASE("free evolution with a contraction block, literal bound value") {
    Mat t = Mat::Zero(2, 2);
    t(0, 0) = 1;
    t(1, 1) = 0.5;
    auto split = validate_split_contraction(Operator(t),
                                            axis_block_decomposition(2, 1));
    auto inst = make_zeno_instance(split,
                                   constant_generator(Mat::Zero(2, 2), 0.0, 1.0),
                                   uniform_schedule(), {1.0});
    const auto curve = zeno_error_curve(inst, {20});
    REQUIRE(curve.size() == 1);
    REQUIRE(curve[0].bound.has_value());
    // caps vanish, so only the h1 term and the contraction tail survive:
    // (1/20) * tau_C + 0.5^20 with tau_C = 3
    CHECK(*curve[0].bound == doctest::Approx(3.0 / 20 + std::pow(0.5, 20)));
    CHECK(curve[0].measured == doctest::Approx(std::pow(0.5, 20)));
  }

  SUBCASE("ramp schedule keeps decay and domination") {
    auto inst = axis_instance(0.5, -I1 * sigma_x(), linear_ramp_schedule());
    const auto curve = zeno_error_curve(inst, {64, 256});
    REQUIRE(curve.size() == 2);
    CHECK(curve[1].measured < curve[0].measured);
    for (const auto& row : curve) {
      REQUIRE(row.bound.has_value());
      CHECK(row.measured <= *row.bound + 1e-8);
    }
  }
}

TEST_CASE("equivariance under block unitaries") {
  Rng rng(7);
  const Mat WI = rng.random_unitary(2);
  const Mat WC = rng.random_unitary(2);
  Mat W = Mat::Zero(4, 4);
  W.topLeftCorner(2, 2) = WI;
  W.bottomRightCorner(2, 2) = WC;

  Mat rot(2, 2);
  rot << 0, 1, -1, 0;
  Mat t = Mat::Zero(4, 4);
  t.topLeftCorner(2, 2) = sigma_x();
  t.bottomRightCorner(2, 2) = 0.6 * rot;

  std::vector<Mat> coeffs;
  for (int k = 0; k < 3; ++k) coeffs.push_back(0.5 * rng.random_matrix(4, 4));
  auto gen = trig_generator(coeffs, 1.0, 0.0, 1.0);

  const auto dec = axis_block_decomposition(4, 2);
  auto inst = make_zeno_instance(validate_split_contraction(Operator(t), dec),
                                 gen, uniform_schedule(), {0.7});

  std::vector<Mat> conj_coeffs;
  for (const Mat& c : coeffs) conj_coeffs.push_back(W * c * W.adjoint());
  auto inst2 = make_zeno_instance(
      validate_split_contraction(Operator(Mat(W * t * W.adjoint())), dec),
      trig_generator(conj_coeffs, 1.0, 0.0, 1.0), uniform_schedule(), {0.7});

  const Mat lhs = corrected_zeno_product(inst2, 32, 0.7);
  const Mat rhs = W * corrected_zeno_product(inst, 32, 0.7) * W.adjoint();
  CHECK(spectral_norm(lhs - rhs) <= 1e-10);

  CHECK(spectral_norm(zeno_limit(inst2, 0.7) -
                      W * zeno_limit(inst, 0.7) * W.adjoint()) <= 1e-10);
}

TEST_CASE("bound evaluators") {
  SUBCASE("all caps zero gives zero") {
    BoundParams p;
    CHECK(zeno_bound_projective(p, 16, {1.0, 1.0}) == 0.0);
    CHECK(zeno_bound_contraction(p, 16) == 0.0);
  }

  SUBCASE("hand-evaluated contraction bound") {
    BoundParams p;
    p.tau_C = 3.0;
    p.partition_norm = 0.25;
    p.contraction_norm = 0.5;
    // k_K = k_P = 0: h = 0, h1 = tau_C, tail = 0.5^20 ~ 9.54e-7
    CHECK(zeno_bound_contraction(p, 20) ==
          doctest::Approx(0.25 * 3.0 + 9.5367431640625e-7));
  }

  SUBCASE("invariant-range vectors never see the leakage term") {
    BoundParams p;
    p.k_K = 1.0;
    p.k_P = 0.5;
    p.k_0 = 5.0;
    p.partition_norm = 0.1;
    const double with = zeno_bound_projective(p, 8, {0.7, 0.0});
    p.k_0 = 0.0;
    CHECK(zeno_bound_projective(p, 8, {0.7, 0.0}) == doctest::Approx(with));
  }

  SUBCASE("guards") {
    BoundParams p;
    CHECK_THROWS_AS(zeno_bound_projective(p, 0, {1.0, 0.0}), config_error);
    CHECK_THROWS_AS(zeno_bound_contraction(p, 0), config_error);
    p.contraction_norm = 1.0;
    CHECK_THROWS_AS(zeno_bound_contraction(p, 4), config_error);
  }

  SUBCASE("assembled parameters for a skew generator") {
    auto inst = axis_instance(0.0, -I1 * sigma_x());
    const auto p = make_bound_params(inst, 4, 1.0);
    CHECK(p.k_K == doctest::Approx(1.0));
    CHECK(p.k_P <= 1e-12);
    CHECK(p.k_0 == doctest::Approx(1.0));
    CHECK(p.tau_C == doctest::Approx(1.0));  // ||T_C|| = 0
    CHECK(p.Lambda == doctest::Approx(1.0)); // growth bound vanishes
    CHECK(p.Omega == doctest::Approx(1.0));
    CHECK(p.partition_norm == doctest::Approx(0.25));
  }

  SUBCASE("assembled parameters for an expanding generator") {
    Mat t = Mat::Zero(2, 2);
    t(0, 0) = 1;
    t(1, 1) = 0.5;
    auto split = validate_split_contraction(Operator(t),
                                            axis_block_decomposition(2, 1));
    auto inst = make_zeno_instance(
        split, constant_generator(Mat::Identity(2, 2), 0.0, 1.0),
        uniform_schedule(), {1.0});
    const auto p = make_bound_params(inst, 4, 1.0);
    CHECK(p.Omega == doctest::Approx(std::exp(1.0)));
    CHECK(p.Lambda == doctest::Approx(std::exp(0.25)));
    CHECK(p.tau_C == doctest::Approx(3.0));
    CHECK(p.k_P == doctest::Approx(1.0));
    CHECK(p.k_0 <= 1e-12);
    CHECK(p.Lambda >= 1.0);
    CHECK(p.Omega > 0.0);
  }
}

TEST_CASE("single kick experiments") {
  Mat u = Mat::Zero(2, 2);
  u(0, 0) = 1;
  u(1, 1) = I1;
  const Operator U(u);

  SUBCASE("commuting generator is exact at every n") {
    Mat k = Mat::Zero(2, 2);
    k(0, 0) = -2.0 * I1;
    k(1, 1) = -5.0 * I1;
    for (const auto& row : single_kick_experiment(U, Operator(k), 0.8,
                                                  {4, 16, 64})) {
      CHECK(row.measured <= 1e-12);
      CHECK_FALSE(row.bound.has_value());
    }
  }

  SUBCASE("pinched limit and first-order rate") {
    Mat h(2, 2);
    h << 1, 2, 2, 4;
    const auto curve = single_kick_experiment(
        U, Operator(Mat(-I1 * h)), 0.7, {64, 128, 256, 512, 4096});
    CHECK(curve.back().measured <= 5e-3);
    for (size_t i = 0; i + 2 < curve.size(); ++i)
      CHECK(curve[i].measured / curve[i + 1].measured >= 1.8);
  }

  SUBCASE("rate bound from a commutator witness") {
    Mat M = Mat::Zero(2, 2);
    M(0, 0) = -I1;
    M(1, 1) = -4.0 * I1;
    Mat L = Mat::Zero(2, 2);
    L(0, 1) = cxd(2.0, -2.0);
    const Mat K = M + L - u.adjoint() * L * u;
    const double t = 0.5;

    const std::vector<int> n_grid = {8, 16, 32, 64};
    const auto curve = single_kick_experiment(U, Operator(K), t, n_grid,
                                              KickWitness{M, L});
    // halving ratios sit above 2 (the 1/n factor) and settle toward it as
    // the exponential correction dies off
    double prev_ratio = 1e300;
    for (size_t i = 0; i + 1 < curve.size(); ++i) {
      REQUIRE(curve[i].bound.has_value());
      const double ratio = *curve[i].bound / *curve[i + 1].bound;
      CHECK(ratio >= 2.0 - 1e-12);
      CHECK(ratio < prev_ratio);
      prev_ratio = ratio;
    }
    CHECK(prev_ratio <= 2.2);

    // the bound controls the interleaving it was stated for
    for (int n : {8, 32}) {
      const Mat Un = repeated(u, n);
      const Mat Uadjn = repeated(u.adjoint(), n);
      Mat interleaved = Mat::Identity(2, 2);
      for (int l = 0; l < n; ++l) {
        const Mat Ul = repeated(u, l);
        const Mat conj = repeated(u.adjoint(), l) * K * Ul;
        interleaved = expm(conj, t / n) * interleaved;
      }
      const Mat lhs_a = Un * expm(Mat(L - Uadjn * L * Un), t / n) * expm(M, t);
      const Mat lhs_b = Un * interleaved;
      const double measured = spectral_norm(lhs_a - lhs_b);
      double bound_n = 0.0;
      for (const auto& row : curve)
        if (int(row.control) == n) bound_n = *row.bound;
      CHECK(measured <= bound_n + 1e-10);
    }
  }

  SUBCASE("witness validation") {
    Mat h(2, 2);
    h << 1, 2, 2, 4;
    const Mat K = -I1 * h;
    CHECK_THROWS_AS(single_kick_experiment(U, Operator(K), 0.5, {8},
                                           KickWitness{sigma_x(), sigma_x()}),
                    config_error);
    Mat M = Mat::Zero(2, 2);  // commutes, but fails to recompose K
    M(0, 0) = -I1;
    CHECK_THROWS_AS(single_kick_experiment(U, Operator(K), 0.5, {8},
                                           KickWitness{M, Mat::Zero(2, 2)}),
                    config_error);
  }

  SUBCASE("guards") {
    Mat h(2, 2);
    h << 1, 2, 2, 4;
    CHECK_THROWS_AS(
        single_kick_experiment(Operator(Mat(2.0 * u)), Operator(h), 0.5, {8}),
        config_error);
    CHECK_THROWS_AS(single_kick_experiment(U, Operator(h), 0.0, {8}),
                    config_error);
    CHECK_THROWS_AS(single_kick_experiment(U, Operator(h), 0.5, {}),
                    config_error);
  }
}
