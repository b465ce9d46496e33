#include "zlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <exception>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace zlab {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// schema access: every failure names the offending field

[[noreturn]] void schema_error(const std::string& field, const std::string& why) {
  throw config_error("config: field '" + field + "' " + why);
}

const json& require_field(const json& node, const std::string& field) {
  if (!node.is_object()) schema_error(field, "needs an enclosing object");
  auto it = node.find(field);
  if (it == node.end()) schema_error(field, "is missing");
  return *it;
}

double number_field(const json& node, const std::string& field) {
  const json& v = require_field(node, field);
  if (!v.is_number()) schema_error(field, "must be a number");
  return v.get<double>();
}

double number_or(const json& node, const std::string& field, double fallback) {
  if (!node.is_object() || !node.contains(field)) return fallback;
  return number_field(node, field);
}

long integer_field(const json& node, const std::string& field) {
  const json& v = require_field(node, field);
  if (!v.is_number_integer()) schema_error(field, "must be an integer");
  return v.get<long>();
}

std::string string_field(const json& node, const std::string& field) {
  const json& v = require_field(node, field);
  if (!v.is_string()) schema_error(field, "must be a string");
  return v.get<std::string>();
}

std::string string_or(const json& node, const std::string& field,
                      const std::string& fallback) {
  if (!node.is_object() || !node.contains(field)) return fallback;
  return string_field(node, field);
}

std::vector<int> int_grid_field(const json& node, const std::string& field) {
  const json& v = require_field(node, field);
  if (!v.is_array() || v.empty())
    schema_error(field, "must be a nonempty array of integers");
  std::vector<int> grid;
  grid.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_number_integer()) schema_error(field, "must hold integers only");
    const long n = e.get<long>();
    if (n < 1) schema_error(field, "must hold positive entries");
    if (!grid.empty() && n <= grid.back())
      schema_error(field, "must be strictly increasing");
    grid.push_back(static_cast<int>(n));
  }
  return grid;
}

std::vector<double> real_grid_field(const json& node, const std::string& field) {
  const json& v = require_field(node, field);
  if (!v.is_array() || v.empty())
    schema_error(field, "must be a nonempty array of numbers");
  std::vector<double> grid;
  grid.reserve(v.size());
  for (const json& e : v) {
    if (!e.is_number()) schema_error(field, "must hold numbers only");
    grid.push_back(e.get<double>());
  }
  return grid;
}

NormKind norm_field(const json& node) {
  const std::string name = string_or(node, "norm", "spectral");
  if (name == "spectral") return NormKind::spectral;
  if (name == "frobenius") return NormKind::frobenius;
  schema_error("norm", "must be 'spectral' or 'frobenius'");
}

// ---------------------------------------------------------------------------
// matrices, generators, schedules

Mat matrix_field(const json& node, const std::string& field) {
  return matrix_from_json(require_field(node, field), field);
}

// key is looked up in node; display names the field in error messages
// (so nested fields read "generator.coeffs" rather than just "coeffs")
std::vector<Mat> matrix_list_field(const json& node, const std::string& key,
                                   const std::string& display) {
  if (!node.is_object() || !node.contains(key)) schema_error(display, "is missing");
  const json& v = node[key];
  if (!v.is_array() || v.empty())
    schema_error(display, "must be a nonempty array of matrices");
  std::vector<Mat> out;
  out.reserve(v.size());
  for (size_t i = 0; i < v.size(); ++i)
    out.push_back(
        matrix_from_json(v[i], display + "[" + std::to_string(i) + "]"));
  return out;
}

TimeDepGenerator generator_field(const json& node, const std::string& field) {
  const json& g = require_field(node, field);
  if (!g.is_object()) schema_error(field, "must be an object");
  const std::string rep = string_or(g, "rep", "constant");
  const double t1 = number_or(g, "t1", 0.0);
  const double t2 = number_or(g, "t2", 1.0);
  if (rep == "constant") {
    auto coeffs = matrix_list_field(g, "coeffs", field + ".coeffs");
    if (coeffs.size() != 1)
      schema_error(field + ".coeffs", "must hold exactly one matrix");
    return constant_generator(coeffs[0], t1, t2);
  }
  if (rep == "poly")
    return poly_generator(matrix_list_field(g, "coeffs", field + ".coeffs"),
                          t1, t2);
  if (rep == "trig")
    return trig_generator(matrix_list_field(g, "coeffs", field + ".coeffs"),
                          number_field(g, "period"), t1, t2);
  if (rep == "tabulated") {
    const json& times = require_field(g, "times");
    if (!times.is_array()) schema_error(field + ".times", "must be an array");
    std::vector<double> ts;
    for (const json& e : times) {
      if (!e.is_number()) schema_error(field + ".times", "must hold numbers");
      ts.push_back(e.get<double>());
    }
    return tabulated_generator(
        std::move(ts), matrix_list_field(g, "samples", field + ".samples"));
  }
  schema_error(field + ".rep",
               "must be 'constant', 'poly', 'trig', or 'tabulated'");
}

Schedule schedule_field(const json& node) {
  if (!node.is_object() || !node.contains("schedule")) return uniform_schedule();
  const json& s = node["schedule"];
  if (s.is_string()) {
    const std::string name = s.get<std::string>();
    if (name == "uniform") return uniform_schedule();
    if (name == "linear_ramp") return linear_ramp_schedule();
    schema_error("schedule", "must be 'uniform', 'linear_ramp', or a custom "
                             "object");
  }
  if (!s.is_object()) schema_error("schedule", "must be a string or an object");
  if (string_field(s, "kind") != "custom")
    schema_error("schedule.kind", "must be 'custom' for schedule objects");
  const json& rows = require_field(s, "rows");
  if (!rows.is_object() || rows.empty())
    schema_error("schedule.rows", "must map n to weight rows");
  std::map<int, std::vector<double>> parsed;
  for (auto it = rows.begin(); it != rows.end(); ++it) {
    int n = 0;
    try {
      size_t used = 0;
      n = std::stoi(it.key(), &used);
      if (used != it.key().size()) throw std::invalid_argument(it.key());
    } catch (const std::exception&) {
      schema_error("schedule.rows", "keys must be integers, got '" + it.key() +
                                        "'");
    }
    if (!it->is_array() || it->empty())
      schema_error("schedule.rows", "row for n=" + it.key() +
                                        " must be a nonempty array");
    std::vector<double> row;
    for (const json& w : *it) {
      if (!w.is_number())
        schema_error("schedule.rows", "row for n=" + it.key() +
                                          " must hold numbers only");
      row.push_back(w.get<double>());
    }
    parsed.emplace(n, std::move(row));
  }
  return custom_schedule(std::move(parsed));
}

std::vector<double> sample_grid_field(const json& node) {
  if (node.contains("s_grid")) return real_grid_field(node, "s_grid");
  return {number_or(node, "s", 1.0)};
}

json constant_generator_json(const Mat& K0, double t1, double t2) {
  json g;
  g["rep"] = "constant";
  g["coeffs"] = json::array({matrix_to_json(K0)});
  g["t1"] = t1;
  g["t2"] = t2;
  return g;
}

// ---------------------------------------------------------------------------
// worker pool: grid points fan out, slots are gathered in grid order

unsigned thread_budget(std::size_t points) {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* cap = std::getenv("ZLAB_THREADS")) {
    char* end = nullptr;
    const unsigned long parsed = std::strtoul(cap, &end, 10);
    if (end == cap || *end != '\0' || parsed == 0)
      throw config_error("ZLAB_THREADS must be a positive integer");
    hw = std::min<unsigned long>(hw, parsed);
  }
  return static_cast<unsigned>(std::min<std::size_t>(hw, points));
}

void parallel_for(std::size_t points,
                  const std::function<void(std::size_t)>& task) {
  const unsigned workers = thread_budget(points);
  if (workers <= 1) {
    for (std::size_t i = 0; i < points; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto drain = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(drain);
  for (std::thread& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// kind runners

ExperimentResult run_zeno(const ExperimentConfig& config) {
  const json& inst = config.instance;
  ExperimentResult out;
  out.config = config;
  out.control_label = "n";
  const std::string mode = string_or(inst, "mode", "split");
  const NormKind norm = norm_field(inst);

  if (mode == "kick") {
    const Operator U(matrix_field(inst, "U"), norm);
    const Operator K(matrix_field(inst, "K"), norm);
    const double t = number_field(inst, "t");
    const auto n_grid = int_grid_field(inst, "n_grid");
    std::optional<KickWitness> witness;
    if (inst.contains("witness")) {
      const json& w = require_field(inst, "witness");
      if (!w.is_object()) schema_error("witness", "must be an object");
      witness = KickWitness{matrix_from_json(require_field(w, "M"), "witness.M"),
                            matrix_from_json(require_field(w, "L"), "witness.L")};
    }
    out.curve = single_kick_experiment(U, K, t, n_grid, witness);
    out.extras = {{"t", t}};
    return out;
  }
  if (mode != "split")
    schema_error("mode", "must be 'split' or 'kick'");

  const Mat T = matrix_field(inst, "T");
  const auto dim_I = static_cast<Eigen::Index>(integer_field(inst, "dim_I"));
  const Mat basis = inst.contains("basis")
                        ? matrix_field(inst, "basis")
                        : Mat(Mat::Identity(T.rows(), T.cols()));
  const auto split =
      validate_split_contraction(Operator(T, norm),
                                 make_block_decomposition(basis, dim_I));
  const auto gen = generator_field(inst, "generator");
  const auto schedule = schedule_field(inst);
  const auto s_grid = sample_grid_field(inst);
  const auto n_grid = int_grid_field(inst, "n_grid");
  const auto zeno_inst = make_zeno_instance(split, gen, schedule, s_grid);

  out.curve.resize(n_grid.size());
  parallel_for(n_grid.size(), [&](std::size_t i) {
    out.curve[i] = zeno_error_curve(zeno_inst, {n_grid[i]}).front();
  });
  if (s_grid.size() == 1) out.extras = {{"s", s_grid.front()}};
  return out;
}

ExperimentResult run_adiabatic(const ExperimentConfig& config) {
  const json& inst = config.instance;
  ExperimentResult out;
  out.config = config;
  out.control_label = "gamma";
  const NormKind norm = norm_field(inst);

  const Mat A = matrix_field(inst, "A");
  const auto dim_I = static_cast<Eigen::Index>(integer_field(inst, "dim_I"));
  const Mat basis = inst.contains("basis")
                        ? matrix_field(inst, "basis")
                        : Mat(Mat::Identity(A.rows(), A.cols()));
  const auto dec = make_block_decomposition(basis, dim_I);
  const auto gen = generator_field(inst, "generator");
  const auto gamma_grid = real_grid_field(inst, "gamma_grid");
  const double t = number_field(inst, "t");

  // validates the full instance (split, skewness, strict complement decay)
  const auto whole = make_adiabatic_instance(Operator(A, norm), dec, gen,
                                             gamma_grid);

  std::optional<AdiabaticBoundParams> params;
  bool witness_mode = false;
  double witness_norm_l = 0.0, witness_eps = 0.0, witness_norm_k = 0.0;
  if (inst.contains("bound")) {
    const json& b = require_field(inst, "bound");
    if (!b.is_object()) schema_error("bound", "must be an object");
    if (!b.contains("mode")) schema_error("bound.mode", "is missing");
    const std::string bmode = string_field(b, "mode");
    if (gen.rep != TimeDepGenerator::Rep::constant)
      schema_error("bound", "needs a constant-coefficient generator");
    if (bmode == "closed_form") {
      AdiabaticBoundParams p;
      p.M_A = number_or(b, "M_A", 1.0);
      p.eta = number_or(b, "eta", 1.0);
      p.c_AB = number_or(b, "c_AB", 1.0);
      if (b.contains("p_poly")) p.p_poly = real_grid_field(b, "p_poly");
      params = p;
    } else if (bmode == "witness") {
      const Operator A_op(A, norm);
      const Operator K_op(gen.coeffs[0], norm);
      const Mat L = commutator_witness(K_op, A_op);
      const Mat pinched = pinch(K_op, spectral_resolution(A_op)).entries;
      const Mat residual =
          gen.coeffs[0] - pinched - (L * A - A * L);
      witness_norm_l = spectral_norm(L);
      witness_eps = spectral_norm(residual);
      witness_norm_k = spectral_norm(gen.coeffs[0]);
      witness_mode = true;
    } else {
      schema_error("bound.mode", "must be 'closed_form' or 'witness'");
    }
  }

  out.curve.resize(gamma_grid.size());
  parallel_for(gamma_grid.size(), [&](std::size_t i) {
    const auto single = make_adiabatic_instance(Operator(A, norm), dec, gen,
                                                {gamma_grid[i]});
    ErrorCurveRow row = adiabatic_error_curve(single, t, params).front();
    if (witness_mode)
      row.bound = adiabatic_witness_bound(gamma_grid[i], witness_norm_l,
                                          witness_eps, witness_norm_k,
                                          t - whole.t1);
    out.curve[i] = std::move(row);
  });
  out.extras = {{"t", t}};
  return out;
}

ExperimentResult run_ergodic(const ExperimentConfig& config) {
  const json& inst = config.instance;
  ExperimentResult out;
  out.config = config;
  out.control_label = "n";
  const NormKind norm = norm_field(inst);

  const Operator U(matrix_field(inst, "U"), norm);
  const auto gen = generator_field(inst, "generator");
  const auto schedule = schedule_field(inst);
  const auto s_grid = sample_grid_field(inst);
  const auto n_grid = int_grid_field(inst, "n_grid");
  const auto pinched = ergodic_mean_pinching(gen, U);

  out.curve.resize(n_grid.size());
  parallel_for(n_grid.size(), [&](std::size_t i) {
    const int n = n_grid[i];
    double worst = 0.0;
    for (double s : s_grid)
      worst = std::max(
          worst, spectral_norm(Mat(partial_ergodic_mean(gen, U, schedule, n,
                                                        n - 1, s) -
                                   pinched.eval(s))));
    out.curve[i] = {static_cast<double>(n), worst, std::nullopt};
  });
  if (s_grid.size() == 1) out.extras = {{"s", s_grid.front()}};
  return out;
}

ExperimentResult run_bounds(const ExperimentConfig& config) {
  const json& inst = config.instance;
  ExperimentResult out;
  out.config = config;
  out.control_label = "n";
  const NormKind norm = norm_field(inst);

  const Operator T(matrix_field(inst, "T"), norm);
  const auto genL = generator_field(inst, "L");
  const auto schedule = schedule_field(inst);
  const double s = number_or(inst, "s", 1.0);
  const double t1 = number_or(inst, "t1", genL.t1);
  const auto n_grid = int_grid_field(inst, "n_grid");

  out.curve.resize(n_grid.size());
  parallel_for(n_grid.size(), [&](std::size_t i) {
    const int n = n_grid[i];
    const auto bm = kernel_bound_check(genL, T, schedule, n, n - 1, s, t1);
    out.curve[i] = {static_cast<double>(n), bm.measured, bm.bound};
  });
  out.extras = {{"s", s}};
  return out;
}

void check_curve_invariants(ExperimentResult& result) {
  for (size_t i = 0; i < result.curve.size(); ++i) {
    const auto& row = result.curve[i];
    if (!std::isfinite(row.measured) || row.measured < 0.0)
      throw numeric_error("run_experiment: measured column must be finite and "
                          "nonnegative");
    if (i > 0 && !(result.curve[i - 1].control < row.control))
      throw numeric_error("run_experiment: control column must be strictly "
                          "increasing");
    if (row.bound && !(*row.bound >= row.measured)) result.bound_ok = false;
  }
}

std::string format_real(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool any_bound(const ErrorCurve& curve) {
  return std::any_of(curve.begin(), curve.end(),
                     [](const ErrorCurveRow& r) { return r.bound.has_value(); });
}

std::string meta_line(const ExperimentResult& result) {
  std::string line = "# experiment=" + result.config.name +
                     " kind=" + kind_name(result.config.kind) +
                     " seed=" + std::to_string(result.config.seed);
  return line;
}

std::string table_text(const ExperimentResult& result) {
  std::string text = result.control_label + ",measured,bound";
  for (const auto& extra : result.extras) text += "," + extra.first;
  text += "\n";
  for (const auto& row : result.curve) {
    text += format_real(row.control) + "," + format_real(row.measured) + ",";
    if (row.bound) text += format_real(*row.bound);
    for (const auto& extra : result.extras)
      text += "," + format_real(extra.second);
    text += "\n";
  }
  if (any_bound(result.curve))
    text += std::string("# bound_check=") + (result.bound_ok ? "pass" : "fail") +
            "\n";
  return text;
}

}  // namespace

ExperimentKind parse_kind(const std::string& name) {
  if (name == "zeno") return ExperimentKind::zeno;
  if (name == "adiabatic") return ExperimentKind::adiabatic;
  if (name == "ergodic") return ExperimentKind::ergodic;
  if (name == "bounds") return ExperimentKind::bounds;
  if (name == "selftest") return ExperimentKind::selftest;
  throw config_error("config: unknown kind '" + name + "'");
}

std::string kind_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::zeno: return "zeno";
    case ExperimentKind::adiabatic: return "adiabatic";
    case ExperimentKind::ergodic: return "ergodic";
    case ExperimentKind::bounds: return "bounds";
    case ExperimentKind::selftest: return "selftest";
  }
  throw config_error("kind_name: invalid kind");
}

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& node, const std::string& field) {
  if (!node.is_array() || node.empty())
    schema_error(field, "must be a nonempty array of matrix rows");
  const size_t cols = node.at(0).is_array() ? node.at(0).size() : 0;
  if (cols == 0) schema_error(field, "rows must be nonempty arrays");
  Mat m(static_cast<Eigen::Index>(node.size()),
        static_cast<Eigen::Index>(cols));
  for (size_t r = 0; r < node.size(); ++r) {
    const json& row = node[r];
    if (!row.is_array() || row.size() != cols)
      schema_error(field, "rows must all have the same length");
    for (size_t c = 0; c < cols; ++c) {
      const json& e = row[c];
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() ||
          !e[1].is_number())
        schema_error(field, "entries must be [re, im] pairs");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          cxd(e[0].get<double>(), e[1].get<double>());
    }
  }
  return m;
}

ExperimentConfig parse_config(const json& doc) {
  if (!doc.is_object())
    throw config_error("config: top level must be an object");
  ExperimentConfig config;
  config.kind = parse_kind(string_field(doc, "kind"));
  config.name = string_or(doc, "name", kind_name(config.kind));
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_unsigned() && !s.is_number_integer())
      schema_error("seed", "must be a nonnegative integer");
    if (s.is_number_integer() && s.get<long long>() < 0)
      schema_error("seed", "must be a nonnegative integer");
    config.seed = s.get<std::uint64_t>();
  }
  if (config.kind != ExperimentKind::selftest) {
    const json& inst = require_field(doc, "instance");
    if (!inst.is_object()) schema_error("instance", "must be an object");
    config.instance = inst;
  }
  return config;
}

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw config_error("config: cannot open '" + path + "'");
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::parse_error& e) {
    throw config_error("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

ExperimentConfig preset(const std::string& name) {
  ExperimentConfig config;
  config.name = name;
  config.seed = 1;
  json inst;

  const auto doubling = [](int lo, int hi) {
    json grid = json::array();
    for (int n = lo; n <= hi; n *= 2) grid.push_back(n);
    return grid;
  };
  Mat sx(2, 2);
  sx << 0, 1, 1, 0;

  if (name == "zeno_projective" || name == "zeno_contraction") {
    config.kind = ExperimentKind::zeno;
    Mat T = Mat::Zero(2, 2);
    T(0, 0) = 1.0;
    T(1, 1) = (name == "zeno_contraction") ? 0.5 : 0.0;
    inst["mode"] = "split";
    inst["T"] = matrix_to_json(T);
    inst["dim_I"] = 1;
    inst["generator"] =
        constant_generator_json(Mat(cxd(0.0, -1.0) * sx), 0.0, 1.0);
    inst["schedule"] = "uniform";
    inst["s"] = 1.0;
    inst["n_grid"] = doubling(8, 512);
  } else if (name == "unitary_kick") {
    config.kind = ExperimentKind::zeno;
    Mat U = Mat::Zero(2, 2);
    U(0, 0) = 1.0;
    U(1, 1) = cxd(0.0, 1.0);
    Mat K(2, 2);
    K << 1, 2, 3, 4;
    // K = M + L - U^{-1} L U with M the pinched diagonal
    Mat M = Mat::Zero(2, 2);
    M(0, 0) = 1.0;
    M(1, 1) = 4.0;
    Mat L = Mat::Zero(2, 2);
    L(0, 1) = cxd(1.0, 1.0);
    L(1, 0) = cxd(1.5, -1.5);
    inst["mode"] = "kick";
    inst["U"] = matrix_to_json(U);
    inst["K"] = matrix_to_json(K);
    inst["t"] = 1.0;
    inst["n_grid"] = doubling(8, 1024);
    inst["witness"] = {{"M", matrix_to_json(M)}, {"L", matrix_to_json(L)}};
  } else if (name == "cptp_kick") {
    config.kind = ExperimentKind::zeno;
    // channel on the Hilbert-Schmidt space of 2x2 matrices, column-stacking
    // order (r00, r10, r01, r11): diagonal entries kept, coherences damped
    Mat T = Mat::Zero(4, 4);
    T(0, 0) = 1.0;
    T(1, 1) = 0.7;
    T(2, 2) = 0.7;
    T(3, 3) = 1.0;
    Mat basis = Mat::Zero(4, 4);  // invariant block first: e0, e3, then e1, e2
    basis(0, 0) = 1.0;
    basis(3, 1) = 1.0;
    basis(1, 2) = 1.0;
    basis(2, 3) = 1.0;
    const Mat drive =
        cxd(0.0, -1.0) *
        build_superoperator(SuperKind::commutator, Operator(Mat(0.5 * sx)))
            .entries;
    inst["mode"] = "split";
    inst["T"] = matrix_to_json(T);
    inst["dim_I"] = 2;
    inst["basis"] = matrix_to_json(basis);
    inst["generator"] = constant_generator_json(drive, 0.0, 1.0);
    inst["schedule"] = "uniform";
    inst["s"] = 1.0;
    inst["n_grid"] = doubling(8, 1024);
  } else if (name == "adiabatic_unitary") {
    config.kind = ExperimentKind::adiabatic;
    Mat A = Mat::Zero(2, 2);
    A(0, 0) = cxd(0.0, 1.0);
    A(1, 1) = cxd(0.0, -1.0);
    const double period = 3.14159265358979323846;
    inst["A"] = matrix_to_json(A);
    inst["dim_I"] = 2;
    inst["generator"] =
        constant_generator_json(Mat(cxd(0.0, -0.5) * sx), 0.0, period);
    inst["t"] = period;
    inst["gamma_grid"] = {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
    inst["bound"] = {{"mode", "witness"}};
  } else if (name == "adiabatic_block") {
    config.kind = ExperimentKind::adiabatic;
    Mat A = Mat::Zero(3, 3);
    A(0, 0) = cxd(0.0, 1.0);
    A(1, 1) = cxd(0.0, -1.0);
    A(2, 2) = -1.0;
    Mat K = Mat::Constant(3, 3, cxd(0.0, -1.0));
    K.diagonal().setZero();
    inst["A"] = matrix_to_json(A);
    inst["dim_I"] = 2;
    inst["generator"] = constant_generator_json(K, 0.0, 1.0);
    inst["t"] = 1.0;
    inst["gamma_grid"] = {1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0};
  } else {
    throw config_error("preset: unknown name '" + name + "'");
  }
  config.instance = std::move(inst);
  return config;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  switch (config.kind) {
    case ExperimentKind::zeno: result = run_zeno(config); break;
    case ExperimentKind::adiabatic: result = run_adiabatic(config); break;
    case ExperimentKind::ergodic: result = run_ergodic(config); break;
    case ExperimentKind::bounds: result = run_bounds(config); break;
    case ExperimentKind::selftest:
      throw config_error("run_experiment: kind 'selftest' has no curve; use "
                         "the selftest entry point");
  }
  check_curve_invariants(result);
  return result;
}

std::string csv_body(const ExperimentResult& result) {
  return meta_line(result) + "\n" + table_text(result);
}

void write_csv(const ExperimentResult& result, std::ostream& os) {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", &utc);
  os << meta_line(result) << "\n"
     << "# generated=" << stamp << "\n"
     << table_text(result);
}

void write_csv_file(const ExperimentResult& result, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw config_error("write_csv_file: cannot open '" + path + "'");
  write_csv(result, os);
}

RateFit fit_rate(const ErrorCurve& curve, double control_min,
                 double control_max) {
  if (!(control_min <= control_max))
    throw config_error("fit_rate: window must satisfy control_min <= "
                       "control_max");
  std::vector<double> x, y;
  for (const auto& row : curve) {
    if (row.control < control_min || row.control > control_max) continue;
    if (!(row.control > 0.0))
      throw config_error("fit_rate: control values must be positive");
    if (row.measured > 1e-13) {
      x.push_back(std::log(row.control));
      y.push_back(std::log(row.measured));
    }
  }
  if (x.size() < 3)
    throw config_error("fit_rate: need at least 3 rows with measured > 1e-13 "
                       "in the window");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (!(std::abs(det) > 1e-12 * std::max(1.0, n * sxx)))
    throw config_error("fit_rate: degenerate window");
  const double slope = (n * sxy - sx * sy) / det;
  const double intercept = (sy - slope * sx) / n;

  RateFit fit;
  fit.p = -slope;
  fit.C = std::exp(intercept);
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean_y = sy / n;
  for (size_t i = 0; i < x.size(); ++i) {
    const double pred = intercept + slope * x[i];
    ss_res += (y[i] - pred) * (y[i] - pred);
    ss_tot += (y[i] - mean_y) * (y[i] - mean_y);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace zlab
