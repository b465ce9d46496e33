#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "zlab/harness.hpp"

#include <cmath>
#include <sstream>
#include <string>

using namespace zlab;
using nlohmann::json;

namespace {

ErrorCurve synthetic_curve(const std::function<double(double)>& f) {
  ErrorCurve curve;
  for (int n = 8; n <= 512; n *= 2) curve.push_back({double(n), f(n), {}});
  return curve;
}

// returns the config_error message raised by the callable (fails if none)
template <class F>
std::string error_message(F&& f) {
  try {
    f();
  } catch (const config_error& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("fit_rate recovers synthetic decay exponents") {
  const auto fit1 =
      fit_rate(synthetic_curve([](double n) { return 1.0 / n; }), 8.0, 512.0);
  CHECK(std::abs(fit1.p - 1.0) <= 1e-6);
  CHECK(fit1.r2 >= 1.0 - 1e-9);
  CHECK(std::abs(fit1.C - 1.0) <= 1e-6);

  const auto fit2 = fit_rate(
      synthetic_curve([](double n) { return 3.0 * std::pow(n, -1.5); }), 8.0,
      512.0);
  CHECK(std::abs(fit2.p - 1.5) <= 1e-6);
  CHECK(std::abs(fit2.C - 3.0) <= 1e-5);

  const auto flat =
      fit_rate(synthetic_curve([](double) { return 0.25; }), 8.0, 512.0);
  CHECK(std::abs(flat.p) <= 1e-9);
  CHECK(flat.r2 == doctest::Approx(1.0));
}

TEST_CASE("fit_rate windows by control value and needs three live rows") {
  // only n in {64, 128, 256} fall inside the window
  ErrorCurve curve = synthetic_curve([](double n) { return 1.0 / n; });
  curve[0].measured = 100.0;  // poisoned row outside the window
  const auto fit = fit_rate(curve, 64.0, 256.0);
  CHECK(std::abs(fit.p - 1.0) <= 1e-6);

  ErrorCurve tiny = {{8.0, 0.5, {}}, {16.0, 0.25, {}}};
  CHECK_THROWS_AS(fit_rate(tiny, 8.0, 16.0), config_error);

  // rows at the noise floor are dropped before fitting
  ErrorCurve floored = synthetic_curve([](double) { return 1e-16; });
  CHECK_THROWS_AS(fit_rate(floored, 8.0, 512.0), config_error);
}

TEST_CASE("config parsing names the offending field") {
  CHECK(error_message([] {
          parse_config(json{{"name", "x"}});
        }).find("kind") != std::string::npos);
  CHECK(error_message([] {
          parse_config(json{{"kind", "nonsense"}});
        }).find("kind") != std::string::npos);
  CHECK(error_message([] {
          parse_config(json{{"kind", "zeno"}});
        }).find("instance") != std::string::npos);

  json cfg = {{"kind", "zeno"}, {"instance", json::object()}};
  CHECK(error_message([&] {
          run_experiment(parse_config(cfg));
        }).find("'T'") != std::string::npos);

  json custom = preset("zeno_projective").instance;
  custom["schedule"] = {{"kind", "custom"},
                        {"rows", {{"not_a_number", json::array({1.0})}}}};
  ExperimentConfig bad;
  bad.kind = ExperimentKind::zeno;
  bad.instance = custom;
  CHECK(error_message([&] { run_experiment(bad); })
            .find("schedule.rows") != std::string::npos);
}

TEST_CASE("matrix json round trip") {
  Mat m(2, 3);
  m << cxd(1, -2), cxd(0, 0.5), cxd(3, 0), cxd(-1, 1), cxd(0, -7), cxd(2, 2);
  const Mat back = matrix_from_json(matrix_to_json(m), "m");
  CHECK(spectral_norm(Mat(back - m)) <= 1e-15);

  CHECK(error_message([] {
          matrix_from_json(json::array(), "empty");
        }).find("empty") != std::string::npos);
  // ragged rows
  json ragged = json::array();
  ragged.push_back(json::array({json::array({1.0, 0.0})}));
  ragged.push_back(json::array(
      {json::array({1.0, 0.0}), json::array({2.0, 0.0})}));
  CHECK(error_message([&] {
          matrix_from_json(ragged, "ragged");
        }).find("ragged") != std::string::npos);
}

TEST_CASE("presets parse and unknown names are rejected") {
  for (const char* name :
       {"zeno_projective", "zeno_contraction", "unitary_kick", "cptp_kick",
        "adiabatic_unitary", "adiabatic_block"}) {
    const auto cfg = preset(name);
    CHECK(cfg.name == name);
    CHECK(!cfg.instance.empty());
  }
  CHECK_THROWS_AS(preset("no_such_preset"), config_error);
}

TEST_CASE("zeno experiment produces a decaying bounded curve") {
  auto cfg = preset("zeno_projective");
  cfg.instance["n_grid"] = {8, 16, 32, 64};
  const auto res = run_experiment(cfg);
  REQUIRE(res.curve.size() == 4);
  CHECK(res.bound_ok);
  for (size_t i = 0; i + 1 < res.curve.size(); ++i)
    CHECK(res.curve[i + 1].measured < res.curve[i].measured);
  for (const auto& row : res.curve) {
    REQUIRE(row.bound.has_value());
    CHECK(row.measured <= *row.bound + 1e-8);
  }

  const std::string body = csv_body(res);
  CHECK(body.find("# experiment=zeno_projective kind=zeno seed=") !=
        std::string::npos);
  CHECK(body.find("n,measured,bound,s") != std::string::npos);
  CHECK(body.find("# bound_check=pass") != std::string::npos);
  CHECK(body == csv_body(run_experiment(cfg)));

  std::ostringstream os;
  write_csv(res, os);
  CHECK(os.str().find("# generated=") != std::string::npos);
}

TEST_CASE("fit_rate on the projective preset finds first-order decay") {
  const auto res = run_experiment(preset("zeno_projective"));
  const auto fit = fit_rate(res.curve, 32.0, 512.0);
  CHECK(fit.p >= 0.9);
  CHECK(fit.p <= 1.5);
  CHECK(fit.r2 >= 0.98);
}

TEST_CASE("kick mode accepts an explicit witness") {
  const auto res = run_experiment(preset("unitary_kick"));
  CHECK(res.curve.size() == 8);
  CHECK(res.bound_ok);
  for (const auto& row : res.curve) REQUIRE(row.bound.has_value());
  CHECK(res.curve.back().measured < res.curve.front().measured);
}

TEST_CASE("ergodic experiment measures distance to the pinching") {
  json inst;
  inst["U"] = matrix_to_json([] {
    Mat u = Mat::Zero(2, 2);
    u(0, 0) = 1.0;
    u(1, 1) = cxd(std::cos(1.0), std::sin(1.0));
    return u;
  }());
  Mat k(2, 2);
  k << 1, 2, 3, 4;
  inst["generator"] = {{"rep", "constant"},
                       {"coeffs", json::array({matrix_to_json(k)})},
                       {"t1", 0.0},
                       {"t2", 1.0}};
  inst["schedule"] = "uniform";
  inst["s_grid"] = {1.0};
  inst["n_grid"] = {16, 64, 256};
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::ergodic;
  cfg.name = "ergodic_smoke";
  cfg.instance = inst;
  const auto res = run_experiment(cfg);
  REQUIRE(res.curve.size() == 3);
  CHECK(res.curve.back().measured < res.curve.front().measured);
  for (const auto& row : res.curve) CHECK(!row.bound.has_value());
}

TEST_CASE("bounds experiment rows carry dominating bounds") {
  json inst;
  Mat u = Mat::Zero(2, 2);
  u(0, 0) = 1.0;
  u(1, 1) = cxd(std::cos(1.0), std::sin(1.0));
  inst["T"] = matrix_to_json(u);
  Mat k(2, 2);
  k << cxd(0, 1), 1, 0, cxd(1, -1);
  inst["L"] = {{"rep", "constant"},
               {"coeffs", json::array({matrix_to_json(k)})},
               {"t1", 0.0},
               {"t2", 1.0}};
  inst["schedule"] = "uniform";
  inst["s"] = 0.75;
  inst["n_grid"] = {8, 16, 32};
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::bounds;
  cfg.name = "bounds_smoke";
  cfg.instance = inst;
  const auto res = run_experiment(cfg);
  REQUIRE(res.curve.size() == 3);
  CHECK(res.bound_ok);
  for (const auto& row : res.curve) {
    REQUIRE(row.bound.has_value());
    CHECK(row.measured <= *row.bound + 1e-9);
  }
}

TEST_CASE("adiabatic closed-form bound fills the curve") {
  json inst;
  Mat a = Mat::Zero(2, 2);
  a(1, 1) = -1.0;
  inst["A"] = matrix_to_json(a);
  inst["dim_I"] = 1;
  Mat b(2, 2);
  b << 0, 1, 1, 0;
  inst["generator"] = {{"rep", "constant"},
                       {"coeffs", json::array({matrix_to_json(b)})},
                       {"t1", 0.0},
                       {"t2", 1.0}};
  inst["t"] = 1.0;
  inst["gamma_grid"] = {4.0, 8.0, 16.0};
  inst["bound"] = {{"mode", "closed_form"}};
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::adiabatic;
  cfg.name = "adiabatic_smoke";
  cfg.instance = inst;
  const auto res = run_experiment(cfg);
  REQUIRE(res.curve.size() == 3);
  CHECK(res.control_label == "gamma");
  for (const auto& row : res.curve) REQUIRE(row.bound.has_value());
  CHECK(res.curve.back().measured < res.curve.front().measured);
}

TEST_CASE("selftest kind is not runnable as an experiment") {
  ExperimentConfig cfg;
  cfg.kind = ExperimentKind::selftest;
  CHECK_THROWS_AS(run_experiment(cfg), config_error);
}

TEST_CASE("kind names round trip") {
  for (const char* name : {"zeno", "adiabatic", "ergodic", "bounds",
                           "selftest"})
    CHECK(kind_name(parse_kind(name)) == name);
  CHECK_THROWS_AS(parse_kind("other"), config_error);
}
