#include "lsopt/cli_runner.hpp"

#include "lsopt/data_fixtures.hpp"
#include "lsopt/portfolio_stats.hpp"
#include "lsopt/qp_bridge.hpp"
#include "lsopt/reproduce.hpp"
#include "lsopt/risk_models.hpp"
#include "lsopt/robo_advisor.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace lsopt {

namespace {

using json = nlohmann::json;

[[noreturn]] void bad_input(const std::string& what) { fail(ErrorCode::InvalidArgument, what); }

const json& need(const json& j, const char* key) {
  if (!j.contains(key)) bad_input(std::string("missing field '") + key + "'");
  return j.at(key);
}

Vector vec(const json& j, const char* name) {
  if (!j.is_array()) bad_input(std::string(name) + " must be an array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
  return v;
}

Matrix mat(const json& j, const char* name) {
  if (!j.is_array() || j.empty() || !j[0].is_array()) bad_input(std::string(name) + " must be an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) bad_input(std::string(name) + " is ragged");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

Vector vec_or(const json& j, const char* key, const Vector& fallback) {
  return j.contains(key) ? vec(j.at(key), key) : fallback;
}

std::optional<Vector> opt_vec(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return vec(j.at(key), key);
}

std::optional<Matrix> opt_mat(const json& j, const char* key) {
  if (!j.contains(key)) return std::nullopt;
  return mat(j.at(key), key);
}

// Scalar or per-asset vector.
Vector broadcast(const json& j, Eigen::Index n, const char* name) {
  if (j.is_number()) return Vector::Constant(n, j.get<double>());
  Vector v = vec(j, name);
  require_size(v, n, name);
  return v;
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json report_json(const SolverReport& r) {
  return {{"iterations", r.iterations},
          {"status", to_string(r.status)},
          {"primal_residual", r.primal_residual},
          {"dual_residual", r.dual_residual}};
}

std::string vector_csv(const Vector& x, const char* label) {
  std::vector<std::vector<std::string>> rows;
  for (Eigen::Index i = 0; i < x.size(); ++i) rows.push_back({std::to_string(i), num(x(i))});
  return to_csv({"index", label}, rows);
}

std::string emit(const json& j, const Vector& x, const char* label, const RunSpec& spec) {
  if (spec.format == OutputFormat::Csv) return vector_csv(x, label);
  return j.dump(2) + "\n";
}

json parse(const std::string& request) {
  try {
    return json::parse(request);
  } catch (const json::parse_error& e) {
    bad_input(std::string("malformed JSON: ") + e.what());
  }
}

ProxFn make_prox(const json& j, Eigen::Index n) {
  const std::string name = need(j, "prox").get<std::string>();
  const double lambda = j.value("lambda", 1.0);
  if (name == "zero") return prox::zero();
  if (name == "soft_threshold" || name == "l1") {
    if (j.contains("lambda") && j.at("lambda").is_array()) {
      return prox::l1_weighted(vec(j.at("lambda"), "lambda"), vec_or(j, "center", Vector::Zero(n)));
    }
    return prox::l1(lambda);
  }
  if (name == "two_sided") {
    const Vector lm = broadcast(need(j, "lambda_minus"), n, "lambda_minus");
    const Vector lp = broadcast(need(j, "lambda_plus"), n, "lambda_plus");
    return ProxFn(name, [lm, lp](const Vector& v) { return soft_threshold_two_sided(v, lm, lp); });
  }
  if (name == "lp_norm") return prox::lp_norm(j.value("p", 2), lambda);
  if (name == "max") return prox::max(lambda);
  if (name == "log_barrier") return prox::log_barrier(lambda, vec_or(j, "b", Vector::Ones(n)));
  if (name == "quadratic") return prox::quadratic(mat(need(j, "Q"), "Q"), vec(need(j, "R"), "R"));
  if (name == "kl") return prox::kl(lambda, vec(need(j, "ref"), "ref"));
  if (name == "bid_ask") {
    return prox::bid_ask(lambda, vec(need(j, "alpha"), "alpha"), vec(need(j, "beta"), "beta"),
                         vec(need(j, "gamma"), "gamma"));
  }
  if (name == "sum_k_largest") return prox::sum_k_largest(lambda, need(j, "k").get<int>());
  if (name == "turnover") {
    const Vector x0 = vec(need(j, "x0"), "x0");
    const double radius = need(j, "radius").get<double>();
    return ProxFn(name, [x0, radius](const Vector& v) { return prox_turnover(v, x0, radius); });
  }
  bad_input("unknown prox '" + name + "'");
}

ConvexSet make_set(const json& j, Eigen::Index n) {
  const std::string type = need(j, "type").get<std::string>();
  if (type == "hyperplane") return Hyperplane{vec(need(j, "a"), "a"), need(j, "b").get<double>()};
  if (type == "halfspace") return Halfspace{vec(need(j, "c"), "c"), need(j, "d").get<double>()};
  if (type == "affine") return AffineSet::make(mat(need(j, "A"), "A"), vec(need(j, "B"), "B"));
  if (type == "box") {
    const double inf = std::numeric_limits<double>::infinity();
    return Box{j.contains("lower") ? broadcast(j.at("lower"), n, "lower") : Vector::Constant(n, -inf),
               j.contains("upper") ? broadcast(j.at("upper"), n, "upper") : Vector::Constant(n, inf)};
  }
  if (type == "ball" || type == "ball_complement") {
    const int p = j.value("p", 2);
    const Vector center = vec_or(j, "center", Vector::Zero(n));
    const double radius = need(j, "radius").get<double>();
    if (type == "ball") return LpBall{p, center, radius};
    return LpBallComplement{p, center, radius};
  }
  if (type == "simplex") return Simplex{};
  if (type == "polyhedron") return Polyhedron{mat(need(j, "C"), "C"), vec(need(j, "D"), "D")};
  bad_input("unknown set '" + type + "'");
}

AdmmConfig admm_overrides(AdmmConfig c, const RunSpec& spec) {
  if (spec.tol) c.eps = c.eps_dual = *spec.tol;
  if (spec.phi) c.phi0 = *spec.phi;
  if (spec.max_iter) c.max_iter = *spec.max_iter;
  return c;
}

AssetUniverse universe(const json& j) {
  if (j.contains("set")) {
    const int id = j.at("set").get<int>();
    AssetUniverse u;
    if (id == 1) u = parameter_set_1().universe;
    else if (id == 2) u = parameter_set_2().universe;
    else bad_input("parameter set must be 1 or 2");
    if (j.contains("mu")) u = u.with_expected_returns(vec(j.at("mu"), "mu"));
    return u;
  }
  const json& spec = need(j, "universe");
  const Vector mu = vec_or(spec, "mu", Vector());
  const double rf = spec.value("rf", 0.0);
  if (spec.contains("cov")) return AssetUniverse::from_covariance(mat(spec.at("cov"), "cov"), mu, rf);
  return AssetUniverse::from_vol_corr(vec(need(spec, "sigma"), "sigma"), mat(need(spec, "rho"), "rho"), mu, rf);
}

DiversificationConstraint diversification(const json& j) {
  if (j.contains("n_min")) return EffectiveBets{j.at("n_min").get<double>()};
  if (j.contains("se_min")) return ShannonEntropyFloor{j.at("se_min").get<double>()};
  return NoDiversification{};
}

RbEngine engine(const json& j) {
  const std::string e = j.value("engine", std::string("ccd"));
  if (e == "ccd") return RbEngine::Ccd;
  if (e == "admm") return RbEngine::Admm;
  bad_input("engine must be ccd or admm");
}

RoboConfig robo_config(const json& j, Eigen::Index n, const RunSpec& spec) {
  RoboConfig c;
  c.benchmark = vec_or(j, "benchmark", Vector());
  c.reference = vec_or(j, "reference", Vector());
  c.current = vec_or(j, "current", Vector());
  c.gamma = j.value("gamma", 0.0);
  c.rho1 = j.value("rho1", 0.0);
  c.rho2 = j.value("rho2", 0.0);
  c.rho1_ref = j.value("rho1_ref", 0.0);
  c.rho2_ref = j.value("rho2_ref", 0.0);
  c.lambda = j.value("lambda", 0.0);
  c.gamma1 = vec_or(j, "gamma1", Vector());
  c.gamma1_ref = vec_or(j, "gamma1_ref", Vector());
  if (auto m = opt_mat(j, "gamma2")) c.gamma2 = *m;
  if (auto m = opt_mat(j, "gamma2_ref")) c.gamma2_ref = *m;
  c.budgets = vec_or(j, "budgets", Vector());
  if (j.contains("upper")) c.upper = broadcast(j.at("upper"), n, "upper");
  c.A = opt_mat(j, "A");
  c.B = opt_vec(j, "B");
  c.C = opt_mat(j, "C");
  c.D = opt_vec(j, "D");
  if (j.contains("sets")) {
    for (const json& s : j.at("sets")) c.nonlinear.push_back(projection(make_set(s, n)));
  }
  const std::string f = j.value("formulation", std::string("admm_ccd"));
  if (f == "admm_qp") c.formulation = RoboFormulation::AdmmQp;
  else if (f != "admm_ccd") bad_input("formulation must be admm_qp or admm_ccd");
  c.admm = admm_overrides(c.admm, spec);
  return c;
}

json stats_json(const Vector& w, const AssetUniverse& u) {
  const PortfolioStats s = stats(w, u);
  json out = {{"expected_return", s.expected_return},
              {"volatility", s.volatility},
              {"herfindahl", s.herfindahl},
              {"effective_bets", s.effective_bets},
              {"diversification_ratio", s.diversification_ratio},
              {"leverage", s.leverage},
              {"long_exposure", s.long_exposure},
              {"short_exposure", s.short_exposure},
              {"risk_contributions", to_json(s.risk_contributions)}};
  if ((w.array() >= 0.0).all()) out["shannon_entropy"] = s.shannon_entropy;
  return out;
}

void write_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    if (!f) bad_input("cannot write " + path);
    f << text;
    if (!f) bad_input("cannot write " + path);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::string& path) {
  if (path.empty()) bad_input("--input is required");
  std::ifstream f(path, std::ios::binary);
  if (!f) bad_input("cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

std::string cmd_prox(const std::string& request, const RunSpec& spec) {
  const json j = parse(request);
  const Vector v = vec(need(j, "v"), "v");
  require_finite(v, "v");
  const ProxFn f = make_prox(j, v.size());
  const Vector x = f(v);
  json out = {{"prox", f.name()}, {"x", to_json(x)}};
  return emit(out, x, "x", spec);
}

std::string cmd_project(const std::string& request, const RunSpec& spec) {
  const json j = parse(request);
  const Vector v = vec(need(j, "v"), "v");
  require_finite(v, "v");
  json out;
  Vector x;
  if (j.contains("sets")) {
    std::vector<ProxFn> fns;
    for (const json& s : j.at("sets")) fns.push_back(projection(make_set(s, v.size())));
    DykstraConfig dc;
    if (spec.tol) dc.tol = *spec.tol;
    if (spec.max_iter) dc.max_cycles = *spec.max_iter;
    const Solution s = dykstra_cycle(fns, v, dc);
    x = s.value();
    out["report"] = report_json(s.report);
  } else {
    x = project(make_set(need(j, "set"), v.size()), v);
  }
  out["x"] = to_json(x);
  out["distance"] = (x - v).norm();
  return emit(out, x, "x", spec);
}

std::string cmd_qp(const std::string& request, const RunSpec& spec) {
  const json j = parse(request);
  QpProblem p;
  p.Q = mat(need(j, "Q"), "Q");
  p.R = vec(need(j, "R"), "R");
  p.A = opt_mat(j, "A");
  p.B = opt_vec(j, "B");
  p.C = opt_mat(j, "C");
  p.D = opt_vec(j, "D");
  const auto n = p.R.size();
  if (j.contains("lower")) p.lower = broadcast(j.at("lower"), n, "lower");
  if (j.contains("upper")) p.upper = broadcast(j.at("upper"), n, "upper");
  QpConfig cfg;
  cfg.admm = admm_overrides(cfg.admm, spec);
  if (spec.phi) cfg.phi0 = *spec.phi;
  const QpSolution s = qp_solve(p, cfg);
  if (!s.report.converged()) fail(ErrorCode::MaxIterExceeded, "QP did not converge");
  json out = {{"x", to_json(s.x)}, {"objective", p.objective(s.x)}, {"report", report_json(s.report)}};
  return emit(out, s.x, "x", spec);
}

std::string cmd_allocate(const std::string& request, const RunSpec& spec) {
  const json j = parse(request);
  const std::string model = need(j, "model").get<std::string>();
  const AssetUniverse u = universe(j);
  const auto n = u.size();
  const AdmmConfig admm = admm_overrides(model_admm_config(), spec);
  RbConfig rb;
  rb.admm = admm;
  if (spec.tol) rb.cd.tol = *spec.tol;
  if (spec.max_iter) rb.cd.max_cycles = *spec.max_iter;
  rb.lambda = j.value("lambda", 0.0);

  json out = {{"model", model}};
  Vector w;
  if (model == "mvo") {
    PortfolioConstraints c = PortfolioConstraints::long_only_budget();
    if (!j.value("long_only", true)) c = PortfolioConstraints{};
    w = mvo_gamma(u, j.value("gamma", 0.0), c).w;
  } else if (model == "gmv") {
    const Vector up = j.contains("upper") ? broadcast(j.at("upper"), n, "upper") : Vector::Ones(n);
    const DiversificationConstraint d = diversification(j);
    HerfindahlResult h;
    const bool bisection = j.value("method", std::string("bisection")) == "bisection";
    if (const auto* eb = std::get_if<EffectiveBets>(&d); eb && bisection) {
      h = gmv_herfindahl(u, up, eb->n_min);
    } else {
      h = gmv_diversified(u, up, d, admm);
    }
    w = h.weights.w;
    if (h.lambda) out["lambda"] = std::isinf(*h.lambda) ? json("inf") : json(*h.lambda);
    out["report"] = report_json(h.report);
  } else if (model == "erc" || model == "rb") {
    const Vector budgets = model == "rb" ? vec(need(j, "budgets"), "budgets") : Vector::Ones(n);
    RiskMeasure m = VolatilityMeasure{};
    if (j.contains("measure") && j.at("measure").value("type", std::string("volatility")) == "stdev") {
      m = StdevMeasure{j.at("measure").value("xi", 1.0), j.at("measure").value("r", 0.0)};
    }
    const RiskResult r = risk_budgeting(u, budgets, m, engine(j), rb);
    w = r.weights.w;
    out["report"] = report_json(r.report);
  } else if (model == "mdp") {
    const RiskResult r = mdp(u, j.value("long_only", true), diversification(j), admm);
    w = r.weights.w;
    out["report"] = report_json(r.report);
  } else if (model == "robo") {
    const RoboConfig c = robo_config(j, n, spec);
    const RoboResult r = j.value("cross_check", false) ? robo_advisor_checked(u, c) : robo_advisor(u, c);
    w = r.weights.w;
    out["report"] = report_json(r.report);
  } else {
    bad_input("unknown model '" + model + "'");
  }
  out["weights"] = to_json(w);
  out["stats"] = stats_json(w, u);
  return emit(out, w, "weight", spec);
}

int run_command(const RunSpec& spec, std::ostream& out, std::ostream& err) {
  try {
    std::string text;
    int code = exit_code::kOk;
    if (spec.command == "reproduce") {
      if (spec.seed && spec.target != "lasso_trace") bad_input("--seed applies only to lasso_trace");
      const Reproduction r = spec.target == "lasso_trace" && spec.seed ? reproduce_lasso_trace(*spec.seed)
                                                                        : reproduce(spec.target);
      if (spec.format == OutputFormat::Csv) {
        text = to_csv(r.header, r.rows);
      } else {
        json checks = json::array();
        for (const auto& c : r.checks) {
          checks.push_back({{"label", c.label},
                            {"expected", std::isinf(c.expected) ? json("inf") : json(c.expected)},
                            {"actual", std::isinf(c.actual) ? json("inf") : json(c.actual)},
                            {"ok", c.ok()}});
        }
        text = json{{"name", r.name}, {"header", r.header}, {"rows", r.rows}, {"checks", checks}, {"ok", r.ok()}}
                   .dump(2) +
               "\n";
      }
      err << diff_report(r);
      if (!r.ok()) code = exit_code::kMismatch;
    } else if (spec.command == "prox" || spec.command == "project" || spec.command == "qp" ||
               spec.command == "allocate") {
      const std::string request = read_file(spec.input);
      if (spec.command == "prox") text = cmd_prox(request, spec);
      else if (spec.command == "project") text = cmd_project(request, spec);
      else if (spec.command == "qp") text = cmd_qp(request, spec);
      else text = cmd_allocate(request, spec);
    } else {
      bad_input("unknown command '" + spec.command + "'");
    }
    if (spec.output.empty()) out << text;
    else write_atomic(spec.output, text);
    return code;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.is_domain() ? exit_code::kDomain : exit_code::kInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kInput;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code::kInput;
  }
}

}  // namespace lsopt
