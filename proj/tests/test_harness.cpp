#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sscfw/harness.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace sscfw;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / ("sscfw_harness_" + std::to_string(::getpid()));
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Json qp_config(int n, const std::string& family, const std::string& method) {
  return Json{{"schema", kConfigSchema},
              {"name", family + "_" + method},
              {"domain", {{"family", family}, {"n", n}}},
              {"objective",
               {{"type", "quadratic"},
                {"Q", {{"source", "random-spd"}, {"seed", 3}, {"mu", 1.0}, {"L", 5.0}}},
                {"b", {{"source", "random"}, {"seed", 4}, {"scale", 2.0}}}}},
              {"method", method},
              {"eps_stat", 1e-7},
              {"max_iter", 500},
              {"seed", 11}};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(SSC_FW_CLI) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string strip_wall(const std::string& csv) {
  std::string out;
  std::istringstream in(csv);
  for (std::string line; std::getline(in, line);) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

}  // namespace

TEST_CASE("random SPD spectrum") {
  const Mat Q = random_spd(20, 7, 1.0, 10.0);
  CHECK((Q - Q.transpose()).norm() <= 1e-12);
  const Vec eig = Eigen::SelfAdjointEigenSolver<Mat>(Q).eigenvalues();
  CHECK(eig.minCoeff() >= 1.0 - 1e-9);
  CHECK(eig.maxCoeff() <= 10.0 + 1e-9);
  CHECK(eig.minCoeff() == Approx(1.0).epsilon(1e-9));
  CHECK(eig.maxCoeff() == Approx(10.0).epsilon(1e-9));
  CHECK((random_spd(20, 7, 1.0, 10.0) - Q).norm() == 0.0);
  CHECK((random_spd(20, 8, 1.0, 10.0) - Q).norm() > 0.0);
}

TEST_CASE("random indefinite matrix has negative curvature") {
  const Mat Q = random_indefinite(12, 5);
  const Vec eig = Eigen::SelfAdjointEigenSolver<Mat>(Q).eigenvalues();
  CHECK(eig.minCoeff() < 0.0);
  CHECK(eig.minCoeff() == Approx(-1.0).epsilon(1e-9));
  CHECK(eig.maxCoeff() == Approx(1.0).epsilon(1e-9));
  const Vec u = Eigen::SelfAdjointEigenSolver<Mat>(Q).eigenvectors().col(0);
  CHECK(u.dot(Q * u) < 0.0);
}

TEST_CASE("identity quadratic on the simplex has the barycenter as minimizer") {
  Json j = qp_config(3, "simplex", "afw");
  j["objective"] = {{"type", "quadratic"}, {"Q", "identity"}, {"b", {0.0, 0.0, 0.0}}};
  j["eps_stat"] = 1e-12;
  j["max_iter"] = 5000;
  const auto cfg = parse_config(j);
  const auto prob = generate_problem(cfg);
  CHECK(prob.x0.isApprox(Vec::Constant(3, 1.0 / 3.0)));
  j["x0"] = {1.0, 0.0, 0.0};
  const auto run = solve_problem(generate_problem(parse_config(j)));
  CHECK((run.records.back().x_tr - Vec::Constant(3, 1.0 / 3.0)).norm() <= 1e-8);
}

TEST_CASE("problem generation is deterministic and validated") {
  const auto a = generate_problem(parse_config(qp_config(6, "box", "pfw")));
  const auto b = generate_problem(parse_config(qp_config(6, "box", "pfw")));
  CHECK((a.Q - b.Q).norm() == 0.0);
  CHECK((a.b - b.b).norm() == 0.0);
  CHECK(a.x0.isApprox(Vec::Constant(6, 0.5)));
  CHECK(a.config_hash == b.config_hash);
  CHECK(a.tau == Approx(theoretical_tau(a.domain, a.method)));

  Json j = qp_config(3, "simplex", "afw");
  j["tau"] = {{"user", 0.2}};
  CHECK(generate_problem(parse_config(j)).tau == 0.2);

  j["x0"] = {0.9, 0.9, 0.0};
  try {
    generate_problem(parse_config(j));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
  }

  Json bad = qp_config(3, "simplex", "sor");
  CHECK_THROWS_AS(generate_problem(parse_config(bad)), Error);
  bad = qp_config(3, "simplex", "afw");
  bad.erase("domain");
  CHECK_THROWS_AS(parse_config(bad), Error);
  bad = qp_config(3, "simplex", "afw");
  bad["schema"] = "other";
  CHECK_THROWS_AS(parse_config(bad), Error);
  bad = qp_config(3, "pentagon", "afw");
  CHECK_THROWS_AS(generate_problem(parse_config(bad)), Error);
  bad = qp_config(3, "simplex", "afw");
  bad["objective"]["Q"] = Json::array({Json::array({1.0, 2.0}), Json::array({0.0, 1.0})});
  CHECK_THROWS_AS(generate_problem(parse_config(bad)), Error);
}

TEST_CASE("smooth, sublevel and product configurations") {
  Json lp = qp_config(4, "lpball", "sor");
  lp["domain"] = {{"family", "lpball"}, {"n", 4}, {"p", 3.0}, {"radius", 1.0}};
  lp["eps_stat"] = 1e-6;
  const auto lp_run = solve_problem(generate_problem(parse_config(lp)));
  CHECK(lp_run.records.size() >= 1);

  Json sub = qp_config(3, "sublevel", "fdfw");
  sub["domain"] = {{"family", "sublevel"}, {"n", 3}, {"H", {{"source", "random-spd"}, {"seed", 2}, {"mu", 1.0}, {"L", 3.0}}},
                   {"center", {0.0, 0.0, 0.0}}, {"level", 0.5}};
  const auto sp = generate_problem(parse_config(sub));
  CHECK(sp.tau == Approx(1.0 / 6.0).epsilon(1e-9));
  CHECK(verify_descent(solve_problem(sp), sp.objective, sp.domain, sp.tau).pass());

  Json prod = qp_config(5, "product", "product");
  prod["domain"] = {{"family", "product"},
                    {"blocks", {{{"family", "simplex"}, {"n", 3}}, {{"family", "lpball"}, {"n", 2}, {"p", 2.0}}}}};
  prod["method"] = {{"kind", "product"}, {"mode", "case2"}, {"blocks", {"pfw", "sor"}}};
  const auto pp = generate_problem(parse_config(prod));
  CHECK(pp.domain.dim() == 5);
  CHECK(pp.method.mode == ProductMode::Case2);
  CHECK(verify_descent(solve_problem(pp), pp.objective, pp.domain, pp.tau).pass());
}

TEST_CASE("trace csv round trip") {
  const auto cfg = parse_config(qp_config(8, "simplex", "pfw"));
  const auto run = solve_problem(generate_problem(cfg));
  const auto rows = trace_rows(run);
  const std::string csv = format_trace_csv(rows);
  CHECK(csv.rfind("k,f,gap_proxy,inner_steps,case,pi_tilde,cum_len,wall_ms\n", 0) == 0);
  CHECK(csv.find('\r') == std::string::npos);
  const auto back = parse_trace_csv(csv);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].k == rows[i].k);
    CHECK(back[i].f == rows[i].f);
    CHECK(back[i].gap_proxy == rows[i].gap_proxy);
    CHECK(back[i].inner_steps == rows[i].inner_steps);
    CHECK(back[i].termination == rows[i].termination);
    CHECK(back[i].pi_tilde == rows[i].pi_tilde);
    CHECK(back[i].cum_len == rows[i].cum_len);
    CHECK(back[i].wall_ms == rows[i].wall_ms);
  }
  CHECK(format_trace_csv(back) == csv);
  CHECK_THROWS_AS(parse_trace_csv("k,f\n1,2\n"), Error);
  CHECK_THROWS_AS(parse_trace_csv(csv + "x,1,2,3,Case1,4,5,6\n"), Error);
}

TEST_CASE("repeated runs are bit-identical apart from wall time") {
  for (const char* family : {"simplex", "l1ball", "box"}) {
    const auto cfg = parse_config(qp_config(7, family, "fdfw"));
    const auto a = format_trace_csv(trace_rows(solve_problem(generate_problem(cfg))));
    const auto b = format_trace_csv(trace_rows(solve_problem(generate_problem(cfg))));
    CHECK(strip_wall(a) == strip_wall(b));
  }
}

TEST_CASE("written traces verify, tampered traces do not") {
  const auto cfg = parse_config(qp_config(10, "simplex", "afw"));
  const std::string prefix = (scratch_dir() / "lib_trace").string();
  const auto out = solve_to_files(cfg, prefix);
  CHECK(out.report.pass());
  CHECK(verify_trace_files(out.csv_path).pass());

  const Json summary = Json::parse(read_file(out.summary_path));
  CHECK(summary["schema"] == kSummarySchema);
  std::string csv = read_file(out.csv_path);
  auto rows = parse_trace_csv(csv);
  REQUIRE(rows.size() > 4);
  rows[3].f += 1e-3;
  const auto rep = verify_trace_text(format_trace_csv(rows), summary);
  CHECK_FALSE(rep.pass());
  CHECK_FALSE(rep.find(check_names::kTraceIntegrity)->pass());
}

TEST_CASE("log gap fit") {
  std::vector<double> f;
  for (int k = 0; k < 40; ++k) f.push_back(1.0 + std::pow(10.0, -0.1 * k));
  const auto fit = log_gap_fit(f, 1.0);
  CHECK(fit.slope == Approx(-0.1).epsilon(1e-9));
  CHECK(fit.r2 == Approx(1.0).epsilon(1e-9));
  CHECK(fit.points == 20);
  const std::vector<double> noisy{1.0 + 1e-2, 1.0 + 1e-4, 1.0 + 1e-6, 1.0 + 1e-8, 1.0 + 2e-16, 1.0 - 2e-16};
  CHECK(log_gap_fit(noisy, 1.0).points == 2);
  const auto ls = least_squares_fit({0, 1, 2}, {1, 3, 5});
  CHECK(ls.slope == Approx(2.0));
  CHECK(ls.intercept == Approx(1.0));
}

TEST_CASE("fnv digest") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("bench runs in parallel with deterministic order") {
  std::vector<ProblemConfig> cfgs;
  for (const char* family : {"simplex", "l1ball", "box"})
    for (const char* method : {"afw", "pfw", "fdfw"}) cfgs.push_back(parse_config(qp_config(5, family, method)));
  const auto serial = run_bench(cfgs, "grid", 1);
  const auto parallel = run_bench(cfgs, "grid", 3);
  CHECK(serial.pass());
  REQUIRE(parallel.entries.size() == serial.entries.size());
  for (std::size_t i = 0; i < cfgs.size(); ++i) {
    CHECK(parallel.entries[i].name == serial.entries[i].name);
    CHECK(parallel.entries[i].f_final == serial.entries[i].f_final);
    CHECK(parallel.entries[i].iterations == serial.entries[i].iterations);
  }
  CHECK(serial.table().find("simplex_afw") != std::string::npos);
  CHECK(serial.to_json()["entries"].size() == cfgs.size());

  ::setenv("SSC_FW_THREADS", "2", 1);
  CHECK(bench_threads(10) == 2);
  CHECK(bench_threads(1) == 1);
  ::unsetenv("SSC_FW_THREADS");
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch_dir();
  const fs::path cfg = dir / "qp.json";
  write_file(cfg.string(), qp_config(12, "simplex", "afw").dump(2));
  const fs::path prefix = dir / "cli_run";
  CHECK(run_cli("solve " + cfg.string() + " -o " + prefix.string(), dir / "solve.log") == 0);
  const std::string csv_path = prefix.string() + ".csv";
  CHECK(fs::exists(csv_path));
  CHECK(fs::exists(prefix.string() + ".summary.json"));
  CHECK(run_cli("verify " + csv_path, dir / "verify.log") == 0);
  CHECK(run_cli("rates " + csv_path + " --M 1e6 --theta 0.5", dir / "rates.log") == 0);

  auto rows = parse_trace_csv(read_file(csv_path));
  rows[2].gap_proxy *= 1.5;
  const fs::path tampered = dir / "tampered.csv";
  write_file(tampered.string(), format_trace_csv(rows));
  fs::copy_file(prefix.string() + ".summary.json", dir / "tampered.summary.json", fs::copy_options::overwrite_existing);
  CHECK(run_cli("verify " + tampered.string(), dir / "tampered.log") == 2);
  CHECK(read_file((dir / "tampered.log").string()).find("FAIL trace-integrity") != std::string::npos);

  write_file((dir / "broken.json").string(), "{\"schema\": ");
  CHECK(run_cli("solve " + (dir / "broken.json").string(), dir / "broken.log") == 1);
  Json infeasible = qp_config(3, "simplex", "afw");
  infeasible["x0"] = {1.0, 1.0, 1.0};
  write_file((dir / "infeasible.json").string(), infeasible.dump());
  CHECK(run_cli("solve " + (dir / "infeasible.json").string() + " -o " + (dir / "inf").string(), dir / "inf.log") == 1);
  CHECK(read_file((dir / "inf.log").string()).find("infeasib") != std::string::npos);
  CHECK(run_cli("verify " + (dir / "missing.csv").string(), dir / "missing.log") == 1);

  write_file((dir / "seg.json").string(), R"({"atoms": [[0.0], [1.0]]})");
  CHECK(run_cli("pwidth " + (dir / "seg.json").string(), dir / "seg.log") == 0);
  CHECK(read_file((dir / "seg.log").string()).find("1.000000") != std::string::npos);
  write_file((dir / "point.json").string(), R"({"atoms": [[0.5, 0.5]]})");
  CHECK(run_cli("pwidth " + (dir / "point.json").string(), dir / "point.log") == 0);
  CHECK(read_file((dir / "point.log").string()).find("degenerate") != std::string::npos);

  Json suite{{"schema", kSuiteSchema}, {"name", "mini"}, {"problems", {"qp.json", qp_config(4, "box", "pfw")}}};
  write_file((dir / "suite.json").string(), suite.dump());
  CHECK(run_cli("bench " + (dir / "suite.json").string() + " -o " + (dir / "bench.json").string(), dir / "bench.log") == 0);
  CHECK(Json::parse(read_file((dir / "bench.json").string()))["entries"].size() == 2);
  fs::remove_all(dir);
}
