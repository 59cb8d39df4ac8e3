#include "sscfw/harness.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <thread>

namespace sscfw {

namespace {

const char* const kCsvHeader = "k,f,gap_proxy,inner_steps,case,pi_tilde,cum_len,wall_ms";

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Vec json_vec(const Json& j, const char* what) {
  if (!j.is_array()) fail(ErrorKind::InvalidInput, std::string(what) + " must be an array of numbers");
  Vec v(static_cast<int>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(ErrorKind::InvalidInput, std::string(what) + " must be an array of numbers");
    v[static_cast<int>(i)] = j[i].get<double>();
  }
  return v;
}

Mat json_mat(const Json& j, int n, const char* what) {
  if (!j.is_array() || static_cast<int>(j.size()) != n)
    fail(ErrorKind::InvalidInput, std::string(what) + " must be an n×n array");
  Mat m(n, n);
  for (int i = 0; i < n; ++i) {
    const Vec row = json_vec(j[i], what);
    if (row.size() != n) fail(ErrorKind::InvalidInput, std::string(what) + " must be an n×n array");
    m.row(i) = row.transpose();
  }
  return m;
}

int json_dim(const Json& spec) {
  if (!spec.contains("n") || !spec["n"].is_number_integer() || spec["n"].get<int>() < 1)
    fail(ErrorKind::InvalidInput, "domain needs a positive integer n");
  return spec["n"].get<int>();
}

std::uint64_t seed_of(const Json& spec, std::uint64_t fallback) {
  return spec.contains("seed") ? spec["seed"].get<std::uint64_t>() : fallback;
}

// Explicit matrix, "identity", or a {"source": ...} generator.
Mat matrix_source(const Json& spec, int n, std::uint64_t seed, const char* what) {
  if (spec.is_string() && spec.get<std::string>() == "identity") return Mat::Identity(n, n);
  if (spec.is_array()) return json_mat(spec, n, what);
  if (spec.is_object()) {
    const std::string src = spec.value("source", "");
    if (src == "random-spd") return random_spd(n, seed_of(spec, seed), spec.at("mu").get<double>(), spec.at("L").get<double>());
    if (src == "random-indefinite") return random_indefinite(n, seed_of(spec, seed));
    if (src == "diagonal") {
      const Vec d = json_vec(spec.at("values"), what);
      if (d.size() != n) fail(ErrorKind::InvalidInput, std::string(what) + " diagonal has the wrong length");
      return d.asDiagonal();
    }
  }
  fail(ErrorKind::InvalidInput, std::string("unrecognized ") + what + " source");
}

Vec vector_source(const Json& spec, int n, std::uint64_t seed, const char* what) {
  if (spec.is_null()) return Vec::Zero(n);
  if (spec.is_array()) {
    Vec v = json_vec(spec, what);
    if (v.size() != n) fail(ErrorKind::InvalidInput, std::string(what) + " has the wrong length");
    return v;
  }
  if (spec.is_object() && spec.value("source", "") == "random")
    return random_vector(n, seed_of(spec, seed), spec.value("scale", 1.0));
  if (spec.is_object() && spec.value("source", "") == "constant") return Vec::Constant(n, spec.at("value").get<double>());
  fail(ErrorKind::InvalidInput, std::string("unrecognized ") + what + " source");
}

}  // namespace

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t ProblemConfig::hash() const { return fnv1a64(raw.dump()); }

ProblemConfig parse_config(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::InvalidInput, "config must be a JSON object");
  if (j.value("schema", "") != kConfigSchema)
    fail(ErrorKind::InvalidInput, std::string("config schema must be '") + kConfigSchema + "'");
  ProblemConfig c;
  c.raw = j;
  c.name = j.value("name", "problem");
  for (const char* key : {"domain", "objective", "method"})
    if (!j.contains(key)) fail(ErrorKind::InvalidInput, std::string("config is missing '") + key + "'");
  c.domain = j["domain"];
  c.objective = j["objective"];
  c.method = j["method"];
  if (j.contains("L") && !j["L"].is_null()) c.L = j["L"].get<double>();
  c.eps_stat = j.value("eps_stat", 1e-8);
  c.max_iter = j.value("max_iter", 1000);
  c.seed = j.value("seed", std::uint64_t{1});
  if (j.contains("tau")) {
    const Json& t = j["tau"];
    if (t.is_object() && t.contains("user"))
      c.user_tau = t["user"].get<double>();
    else if (!(t.is_string() && t.get<std::string>() == "theoretical"))
      fail(ErrorKind::InvalidInput, "tau must be \"theoretical\" or {\"user\": value}");
  }
  if (j.contains("x0") && !j["x0"].is_null()) c.x0 = json_vec(j["x0"], "x0");
  if (c.L && !(*c.L > 0.0)) fail(ErrorKind::InvalidInput, "L must be positive");
  if (!(c.eps_stat >= 0.0) || c.max_iter < 1) fail(ErrorKind::InvalidInput, "eps_stat and max_iter out of range");
  if (c.user_tau && !(*c.user_tau > 0.0)) fail(ErrorKind::InvalidInput, "user tau must be positive");
  return c;
}

ProblemConfig load_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidInput, "malformed config " + path + ": " + e.what());
  }
  return parse_config(j);
}

Domain build_domain(const Json& spec, std::uint64_t seed) {
  if (!spec.is_object() || !spec.contains("family")) fail(ErrorKind::InvalidInput, "domain needs a family");
  const std::string fam = spec["family"].get<std::string>();
  if (fam == "product") {
    if (!spec.contains("blocks") || !spec["blocks"].is_array()) fail(ErrorKind::InvalidInput, "product needs blocks");
    std::vector<Domain> blocks;
    for (std::size_t i = 0; i < spec["blocks"].size(); ++i) blocks.push_back(build_domain(spec["blocks"][i], seed + 1000 * (i + 1)));
    return make_product(std::move(blocks));
  }
  const int n = json_dim(spec);
  if (fam == "simplex") return make_simplex(n, spec.value("scale", 1.0));
  if (fam == "l1ball") return make_l1_ball(n, spec.value("scale", 1.0));
  if (fam == "box") return make_box(n, spec.value("scale", 1.0));
  if (fam == "lpball") return make_lp_ball(n, spec.value("p", 2.0), spec.value("radius", 1.0));
  if (fam == "sublevel") {
    const Mat H = matrix_source(spec.value("H", Json("identity")), n, seed, "H");
    const Vec c = vector_source(spec.value("center", Json()), n, seed + 1, "center");
    return make_sublevel(H, c, spec.value("level", 0.5));
  }
  fail(ErrorKind::InvalidInput, "unknown domain family '" + fam + "'");
}

MethodSpec build_method(const Json& spec, const Domain& dom) {
  MethodSpec m;
  if (spec.is_string()) {
    m.kind = method_kind_from_string(spec.get<std::string>());
  } else if (spec.is_object()) {
    m.kind = method_kind_from_string(spec.value("kind", ""));
    if (m.kind == MethodKind::SOR) {
      m.sor.tau_bar = spec.value("tau_bar", m.sor.tau_bar);
      m.sor.nu_hat = spec.value("nu_hat", m.sor.nu_hat);
    }
    if (m.kind == MethodKind::Product) {
      const std::string mode = spec.value("mode", "case1");
      if (mode != "case1" && mode != "case2") fail(ErrorKind::InvalidInput, "product mode must be case1 or case2");
      m.mode = mode == "case1" ? ProductMode::Case1 : ProductMode::Case2;
      if (!dom.is_product()) fail(ErrorKind::InvalidInput, "product method needs a product domain");
      const auto& p = dom.product();
      const Json& blocks = spec.at("blocks");
      if (!blocks.is_array() || blocks.size() != p.blocks.size())
        fail(ErrorKind::InvalidInput, "product method needs one block method per domain block");
      for (std::size_t i = 0; i < blocks.size(); ++i) m.blocks.push_back(build_method(blocks[i], p.blocks[i]));
      if (spec.contains("weights")) {
        const Vec w = json_vec(spec["weights"], "weights");
        m.case2_weights.assign(w.data(), w.data() + w.size());
      }
    }
  } else {
    fail(ErrorKind::InvalidInput, "method must be a string or an object");
  }
  validate_method(dom, m);
  return m;
}

Mat random_spd(int n, std::uint64_t seed, double mu, double L) {
  if (!(mu > 0.0 && L >= mu)) fail(ErrorKind::InvalidInput, "random-spd needs 0 < mu <= L");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(mu, L);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
  const Mat U = Eigen::HouseholderQR<Mat>(A).householderQ();
  Vec lam(n);
  for (int i = 0; i < n; ++i) lam[i] = unif(rng);
  lam[0] = mu;
  if (n > 1) lam[n - 1] = L;
  Mat Q = U * lam.asDiagonal() * U.transpose();
  return 0.5 * (Q + Q.transpose());
}

Mat random_indefinite(int n, std::uint64_t seed) {
  if (n < 2) fail(ErrorKind::InvalidInput, "random-indefinite needs n >= 2");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Mat A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = gauss(rng);
  const Mat U = Eigen::HouseholderQR<Mat>(A).householderQ();
  Vec lam(n);
  for (int i = 0; i < n; ++i) lam[i] = unif(rng);
  lam[0] = -1.0;
  lam[n - 1] = 1.0;
  Mat Q = U * lam.asDiagonal() * U.transpose();
  return 0.5 * (Q + Q.transpose());
}

Vec random_vector(int n, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * gauss(rng);
  return v;
}

Problem generate_problem(const ProblemConfig& cfg) {
  Problem p;
  p.config_hash = cfg.hash();
  p.domain = build_domain(cfg.domain, cfg.seed);
  p.method = build_method(cfg.method, p.domain);
  const int n = p.domain.dim();
  const Json& o = cfg.objective;
  const std::string type = o.is_object() ? o.value("type", "") : "";
  if (type == "quadratic") {
    p.Q = matrix_source(o.value("Q", Json("identity")), n, cfg.seed + 17, "Q");
    p.b = vector_source(o.value("b", Json()), n, cfg.seed + 29, "b");
    p.objective = quadratic_objective(p.Q, p.b);
  } else if (type == "linear") {
    const Vec c = vector_source(o.value("c", Json()), n, cfg.seed + 31, "c");
    p.objective = linear_objective(c, cfg.L.value_or(1.0));
  } else if (type == "cosine") {
    p.objective = cosine_objective(n, o.value("rho", 0.1));
  } else {
    fail(ErrorKind::InvalidInput, "objective type must be quadratic, linear or cosine");
  }
  if (cfg.L) p.objective.lipschitz_L = *cfg.L;
  if (!(p.objective.lipschitz_L > 0.0))
    fail(ErrorKind::InvalidInput, "objective has no positive gradient Lipschitz constant; set L");
  p.x0 = cfg.x0 ? *cfg.x0 : default_start(p.domain);
  if (p.x0.size() != n) fail(ErrorKind::InvalidInput, "x0 has the wrong dimension");
  require_feasible(p.domain, p.x0, "configured start");
  p.tau = cfg.user_tau ? *cfg.user_tau : theoretical_tau(p.domain, p.method);
  p.options.tau = p.tau;
  p.options.eps_stat = cfg.eps_stat;
  p.options.max_iter = cfg.max_iter;
  return p;
}

RunTrace solve_problem(const Problem& prob) {
  RunTrace run = outer_solve(prob.objective, prob.domain, prob.method, prob.x0, prob.options);
  run.config_hash = prob.config_hash;
  return run;
}

std::vector<TraceRow> trace_rows(const RunTrace& run) {
  std::vector<TraceRow> rows;
  const double K = run.K();
  double cum = 0.0;
  for (const auto& r : run.records) {
    TraceRow row;
    row.k = r.k;
    row.f = r.f_k;
    const double step = (r.x_tr - r.x_k).norm();
    row.gap_proxy = step / K;
    row.inner_steps = r.inner_steps;
    row.termination = r.termination_case;
    row.pi_tilde = r.proj_grad_at_tilde;
    cum += K * row.gap_proxy;
    row.cum_len = cum;
    row.wall_ms = r.wall_ms;
    rows.push_back(row);
  }
  return rows;
}

TraceAux trace_aux(const RunTrace& run) {
  TraceAux a;
  for (const auto& r : run.records) {
    a.f_tr.push_back(r.f_tr);
    a.f_tilde.push_back(r.f_tilde);
    a.tilde_dist.push_back((r.x_tilde - r.x_k).norm());
    a.step_len.push_back((r.x_tr - r.x_k).norm());
  }
  return a;
}

std::string format_trace_csv(const std::vector<TraceRow>& rows) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const auto& r : rows) {
    out += std::to_string(r.k) + "," + fmt17(r.f) + "," + fmt17(r.gap_proxy) + "," + std::to_string(r.inner_steps) + "," +
           to_string(r.termination) + "," + fmt17(r.pi_tilde) + "," + fmt17(r.cum_len) + "," + fmt17(r.wall_ms) + "\n";
  }
  return out;
}

namespace {

struct RawRow {
  std::vector<std::string> cells;
};

std::vector<RawRow> split_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) fail(ErrorKind::InvalidInput, "trace CSV header mismatch");
  std::vector<RawRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    RawRow r;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) r.cells.push_back(cell);
    if (r.cells.size() != 8) fail(ErrorKind::InvalidInput, "trace CSV row has the wrong number of fields");
    rows.push_back(std::move(r));
  }
  return rows;
}

double parse_real(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    fail(ErrorKind::InvalidInput, "trace CSV has a non-numeric field '" + s + "'");
  }
  if (used != s.size()) fail(ErrorKind::InvalidInput, "trace CSV has a non-numeric field '" + s + "'");
  return v;
}

int parse_int(const std::string& s) {
  const double v = parse_real(s);
  if (v != std::floor(v)) fail(ErrorKind::InvalidInput, "trace CSV has a non-integer count '" + s + "'");
  return static_cast<int>(v);
}

std::vector<double> json_doubles(const Json& j, const char* what) {
  if (!j.is_array()) fail(ErrorKind::InvalidInput, std::string("summary is missing ") + what);
  std::vector<double> v;
  for (const auto& e : j) v.push_back(e.is_number() ? e.get<double>() : std::nan(""));
  return v;
}

}  // namespace

std::vector<TraceRow> parse_trace_csv(const std::string& text) {
  std::vector<TraceRow> rows;
  for (const auto& raw : split_csv(text)) {
    TraceRow r;
    r.k = parse_int(raw.cells[0]);
    r.f = parse_real(raw.cells[1]);
    r.gap_proxy = parse_real(raw.cells[2]);
    r.inner_steps = parse_int(raw.cells[3]);
    r.termination = termination_from_string(raw.cells[4]);
    r.pi_tilde = parse_real(raw.cells[5]);
    r.cum_len = parse_real(raw.cells[6]);
    r.wall_ms = parse_real(raw.cells[7]);
    rows.push_back(r);
  }
  return rows;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::InvalidInput, "cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::InvalidInput, "cannot write " + path);
  out << bytes;
  if (!out) fail(ErrorKind::InvalidInput, "write failed for " + path);
}

std::string summary_path_for(const std::string& csv_path) {
  const std::string ext = ".csv";
  if (csv_path.size() > ext.size() && csv_path.compare(csv_path.size() - ext.size(), ext.size(), ext) == 0)
    return csv_path.substr(0, csv_path.size() - ext.size()) + ".summary.json";
  return csv_path + ".summary.json";
}

LinearFit least_squares_fit(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit fit;
  fit.points = static_cast<int>(x.size());
  if (x.size() != y.size()) fail(ErrorKind::InvalidInput, "fit series differ in length");
  if (x.size() < 2) return fit;
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) return fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? sxy * sxy / (sxx * syy) : 1.0;
  return fit;
}

LinearFit log_gap_fit(const std::vector<double>& f, double f_star) {
  std::vector<double> ks, logs;
  const double floor = 1e3 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(f_star));
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double gap = f[k] - f_star;
    if (gap > floor) {
      ks.push_back(static_cast<double>(k));
      logs.push_back(std::log10(gap));
    }
  }
  const std::size_t half = ks.size() / 2;
  return least_squares_fit(std::vector<double>(ks.begin() + half, ks.end()),
                           std::vector<double>(logs.begin() + half, logs.end()));
}

Json report_to_json(const CertificationReport& rep) {
  Json checks = Json::array();
  for (const auto& c : rep.checks) {
    checks.push_back({{"name", c.name},
                      {"inequality", c.statement},
                      {"pass", c.pass()},
                      {"checked", c.checked},
                      {"failures", c.failures},
                      {"worst_violation", c.worst_violation},
                      {"worst_k", c.worst_k},
                      {"failing_k", c.failing_k}});
  }
  return {{"pass", rep.pass()}, {"checks", checks}, {"notes", rep.notes}};
}

Json summary_json(const ProblemConfig& cfg, const Problem& prob, const RunTrace& run, const std::string& csv_text,
                  const CertificationReport& rep) {
  const TraceAux aux = trace_aux(run);
  std::vector<double> f;
  for (const auto& r : run.records) f.push_back(r.f_k);
  double f_star = run.f_final();
  for (double v : f) f_star = std::min(f_star, v);
  const LinearFit fit = log_gap_fit(f, f_star);
  return {{"schema", kSummarySchema},
          {"name", cfg.name},
          {"config_hash", hex64(run.config_hash)},
          {"domain", describe(prob.domain)},
          {"method", prob.method.describe()},
          {"L", run.L},
          {"tau", run.tau},
          {"K", run.K()},
          {"f0", run.f0()},
          {"f_final", run.f_final()},
          {"iterations", run.records.size()},
          {"converged", run.converged},
          {"eps_stat", cfg.eps_stat},
          {"wall_time_s", run.wall_time},
          {"trace_digest", hex64(fnv1a64(csv_text))},
          {"aux", {{"f_tr", aux.f_tr}, {"f_tilde", aux.f_tilde}, {"tilde_dist", aux.tilde_dist}, {"step_len", aux.step_len}}},
          {"log_gap_fit", {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}, {"points", fit.points}}},
          {"certification", report_to_json(rep)}};
}

SolveOutput solve_to_files(const ProblemConfig& cfg, const std::string& prefix) {
  const Problem prob = generate_problem(cfg);
  SolveOutput out;
  out.run = solve_problem(prob);
  out.report = verify_descent(descent_series(out.run));
  const std::string csv = format_trace_csv(trace_rows(out.run));
  out.csv_path = prefix + ".csv";
  out.summary_path = prefix + ".summary.json";
  const std::filesystem::path parent = std::filesystem::path(out.csv_path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  write_file(out.csv_path, csv);
  write_file(out.summary_path, summary_json(cfg, prob, out.run, csv, out.report).dump(2) + "\n");
  return out;
}

CertificationReport verify_trace_text(const std::string& csv_text, const Json& summary) {
  namespace cn = check_names;
  if (summary.value("schema", "") != kSummarySchema) fail(ErrorKind::InvalidInput, "summary schema mismatch");
  const double L = summary.at("L").get<double>();
  const double tau = summary.at("tau").get<double>();
  const Json& aux = summary.at("aux");
  const auto f_tr = json_doubles(aux.value("f_tr", Json()), "f_tr");
  const auto f_tilde = json_doubles(aux.value("f_tilde", Json()), "f_tilde");
  const auto tilde_dist = json_doubles(aux.value("tilde_dist", Json()), "tilde_dist");
  const auto step_len = json_doubles(aux.value("step_len", Json()), "step_len");

  InequalityCheck integrity;
  integrity.name = cn::kTraceIntegrity;
  integrity.statement = "digest matches, k contiguous, cases valid, cum_len = running sum of K*gap_proxy";
  std::vector<std::string> notes;

  integrity.record(-1, fnv1a64(csv_text) == std::stoull(summary.value("trace_digest", "0"), nullptr, 16) ? 0.0 : 1.0, 0.0);
  const auto raw = split_csv(csv_text);
  const std::size_t n = raw.size();
  const bool sizes_ok = f_tr.size() == n && f_tilde.size() == n && tilde_dist.size() == n && step_len.size() == n;
  integrity.record(-1, sizes_ok ? 0.0 : 1.0, 0.0);
  if (!sizes_ok || n == 0) {
    CertificationReport rep;
    rep.checks.push_back(integrity);
    rep.notes.push_back(n == 0 ? "trace has no rows" : "trace and summary lengths differ");
    return rep;
  }

  const double K = tau / (L * (1.0 + tau));
  DescentSeries s;
  s.L = L;
  s.tau = tau;
  double cum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& c = raw[k].cells;
    const int kk = static_cast<int>(k);
    integrity.record(kk, parse_int(c[0]) == kk ? 0.0 : 1.0, 0.0);
    bool case_ok = true;
    Termination term = Termination::Case1;
    try {
      term = termination_from_string(c[4]);
    } catch (const Error&) {
      case_ok = false;
    }
    const int inner = parse_int(c[3]);
    if (case_ok) {
      if (term == Termination::Stationary) case_ok = inner == 0;
      if (term == Termination::Case3 || term == Termination::Case4) case_ok = inner >= 1;
    }
    integrity.record(kk, case_ok && inner >= 0 ? 0.0 : 1.0, 0.0);
    const double proxy = parse_real(c[2]);
    const double step = K * proxy;
    cum += step;
    const double cum_rec = parse_real(c[6]);
    integrity.record(kk, std::abs(cum_rec - cum) / (1.0 + std::abs(cum)), 1e-12);
    integrity.record(kk, std::abs(step - step_len[k]) / (1.0 + step_len[k]), 1e-12);
    cum = cum_rec;
    s.f_k.push_back(parse_real(c[1]));
    s.f_tr.push_back(f_tr[k]);
    s.step_len.push_back(step);
    s.pi_tilde.push_back(parse_real(c[5]));
    s.f_tilde.push_back(f_tilde[k]);
    s.tilde_dist.push_back(tilde_dist[k]);
  }
  CertificationReport rep = verify_descent(s);
  InequalityCheck continuity;
  continuity.name = cn::kObjectiveContinuity;
  continuity.statement = "f(x_tr) at k equals f at k+1";
  for (std::size_t k = 0; k + 1 < n; ++k) continuity.record(static_cast<int>(k), std::abs(s.f_tr[k] - s.f_k[k + 1]), 0.0);
  rep.checks.insert(rep.checks.begin(), integrity);
  rep.checks.push_back(continuity);
  return rep;
}

CertificationReport verify_trace_files(const std::string& csv_path) {
  const std::string csv = read_file(csv_path);
  Json summary;
  try {
    summary = Json::parse(read_file(summary_path_for(csv_path)));
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidInput, std::string("malformed summary: ") + e.what());
  }
  return verify_trace_text(csv, summary);
}

RatesOutput rates_from_files(const std::string& csv_path, double M, double theta, std::optional<double> f_star) {
  const auto rows = parse_trace_csv(read_file(csv_path));
  const Json summary = Json::parse(read_file(summary_path_for(csv_path)));
  if (rows.empty()) fail(ErrorKind::InvalidInput, "trace has no rows");
  const double L = summary.at("L").get<double>();
  const double tau = summary.at("tau").get<double>();
  const double K = tau / (L * (1.0 + tau));
  std::vector<double> f, steps;
  for (const auto& r : rows) {
    f.push_back(r.f);
    steps.push_back(K * r.gap_proxy);
  }
  RatesOutput out;
  out.f_star = f_star ? *f_star : std::min(*std::min_element(f.begin(), f.end()), summary.at("f_final").get<double>());
  out.constants = ssc_rate_constants(L, tau);
  const Desingularizer desing = Desingularizer::power(M, theta);
  out.objective_rate = certify_objective_rate(f, desing, out.constants, out.f_star);
  out.tail_length = certify_tail_length(f, steps, desing, out.constants, out.f_star);
  return out;
}

bool BenchReport::pass() const {
  return std::all_of(entries.begin(), entries.end(), [](const BenchEntry& e) { return e.error.empty() && e.certified; });
}

std::string BenchReport::table() const {
  std::ostringstream os;
  os << std::left << std::setw(28) << "name" << std::setw(34) << "domain" << std::setw(22) << "method" << std::right
     << std::setw(7) << "iters" << std::setw(6) << "conv" << std::setw(20) << "f_final" << std::setw(12) << "tau"
     << std::setw(12) << "fit_slope" << std::setw(8) << "fit_r2" << std::setw(10) << "ms" << "  cert\n";
  for (const auto& e : entries) {
    os << std::left << std::setw(28) << e.name.substr(0, 27) << std::setw(34) << e.domain.substr(0, 33) << std::setw(22)
       << e.method.substr(0, 21) << std::right << std::setw(7) << e.iterations << std::setw(6) << (e.converged ? "yes" : "no")
       << std::setw(20) << std::setprecision(12) << e.f_final << std::setw(12) << std::setprecision(4) << e.tau
       << std::setw(12) << e.fit.slope << std::setw(8) << std::setprecision(3) << e.fit.r2 << std::setw(10)
       << std::setprecision(5) << e.wall_ms << "  "
       << (e.error.empty() ? (e.certified ? "PASS" : "FAIL") : "ERROR: " + e.error) << "\n";
    if (e.error.empty() && !e.certified)
      for (const auto& c : e.report.checks)
        if (!c.pass()) os << "    violated: " << c.name << " [" << c.statement << "] worst=" << c.worst_violation << " at k=" << c.worst_k << "\n";
  }
  return os.str();
}

Json BenchReport::to_json() const {
  Json arr = Json::array();
  for (const auto& e : entries) {
    arr.push_back({{"name", e.name},
                   {"domain", e.domain},
                   {"method", e.method},
                   {"iterations", e.iterations},
                   {"converged", e.converged},
                   {"f_final", e.f_final},
                   {"tau", e.tau},
                   {"certified", e.certified},
                   {"log_gap_fit", {{"slope", e.fit.slope}, {"r2", e.fit.r2}, {"points", e.fit.points}}},
                   {"wall_ms", e.wall_ms},
                   {"error", e.error},
                   {"certification", report_to_json(e.report)}});
  }
  return {{"suite", suite}, {"pass", pass()}, {"entries", arr}};
}

int bench_threads(int jobs) {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("SSC_FW_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = cap;
  }
  return std::max(1, std::min(n, jobs));
}

BenchReport run_bench(const std::vector<ProblemConfig>& configs, const std::string& suite_name, int threads) {
  BenchReport rep;
  rep.suite = suite_name;
  rep.entries.resize(configs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < configs.size(); i = next++) {
      BenchEntry& e = rep.entries[i];
      e.name = configs[i].name;
      try {
        const Problem prob = generate_problem(configs[i]);
        e.domain = describe(prob.domain);
        e.method = prob.method.describe();
        e.tau = prob.tau;
        const RunTrace run = solve_problem(prob);
        e.iterations = static_cast<int>(run.records.size());
        e.converged = run.converged;
        e.f_final = run.f_final();
        e.wall_ms = run.wall_time * 1e3;
        e.report = verify_descent(descent_series(run));
        e.certified = e.report.pass();
        std::vector<double> f;
        for (const auto& r : run.records) f.push_back(r.f_k);
        double f_star = e.f_final;
        for (double v : f) f_star = std::min(f_star, v);
        e.fit = log_gap_fit(f, f_star);
      } catch (const std::exception& ex) {
        e.error = ex.what();
      }
    }
  };
  const int nt = std::max(1, threads);
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return rep;
}

std::vector<ProblemConfig> load_suite(const std::string& path, std::string* suite_name) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    fail(ErrorKind::InvalidInput, "malformed suite " + path + ": " + e.what());
  }
  if (j.value("schema", "") != kSuiteSchema) fail(ErrorKind::InvalidInput, std::string("suite schema must be '") + kSuiteSchema + "'");
  if (suite_name) *suite_name = j.value("name", "suite");
  const auto base = std::filesystem::path(path).parent_path();
  std::vector<ProblemConfig> out;
  for (const auto& p : j.at("problems")) {
    if (p.is_string())
      out.push_back(load_config((base / p.get<std::string>()).string()));
    else
      out.push_back(parse_config(p));
  }
  return out;
}

}  // namespace sscfw
