#include "sscfw/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace sscfw;

namespace {

void print_report(const CertificationReport& rep) {
  std::cout << rep.summary();
  std::cout << (rep.pass() ? "certification: PASS" : "certification: FAIL") << "\n";
}

void print_rate(const RateCertificate& c) {
  std::cout << (c.pass() ? "PASS " : "FAIL ") << c.name << " checked=" << c.pass_at.size() << " failures=" << c.failures
            << " worst_violation=" << c.worst_violation << " at k=" << c.worst_k << "\n";
}

int cmd_solve(const std::string& config, std::string out) {
  const ProblemConfig cfg = load_config(config);
  if (out.empty()) out = std::filesystem::path(config).stem().string();
  const SolveOutput res = solve_to_files(cfg, out);
  std::cout << "iterations " << res.run.records.size() << (res.run.converged ? " (converged)" : " (iteration cap)")
            << "\nf_final " << res.run.f_final() << "\ntrace " << res.csv_path << "\nsummary " << res.summary_path << "\n";
  print_report(res.report);
  return res.report.pass() ? 0 : 2;
}

int cmd_verify(const std::string& trace) {
  const CertificationReport rep = verify_trace_files(trace);
  print_report(rep);
  return rep.pass() ? 0 : 2;
}

int cmd_rates(const std::string& trace, double M, double theta, std::optional<double> f_star) {
  const RatesOutput out = rates_from_files(trace, M, theta, f_star);
  std::cout << "f_star " << out.f_star << "\na " << out.constants.a << "\nb " << out.constants.b << "\n";
  print_rate(out.objective_rate);
  print_rate(out.tail_length);
  for (const auto& n : out.objective_rate.notes) std::cout << "note: " << n << "\n";
  return out.pass() ? 0 : 2;
}

int cmd_pwidth(const std::string& path) {
  const Json j = Json::parse(read_file(path));
  std::vector<Vec> atoms;
  for (const auto& a : j.at("atoms")) {
    Vec v(static_cast<int>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v[static_cast<int>(i)] = a[i].get<double>();
    atoms.push_back(v);
  }
  const double pw = pyramidal_width_bruteforce(atoms, j.value("grid", 6));
  if (std::isinf(pw)) {
    std::cout << "degenerate\n";
    return 0;
  }
  std::printf("%.6f\n", pw);
  return 0;
}

int cmd_bench(const std::string& suite, const std::string& out) {
  std::string name;
  const auto configs = load_suite(suite, &name);
  const BenchReport rep = run_bench(configs, name, bench_threads(static_cast<int>(configs.size())));
  std::cout << rep.table();
  std::cout << (rep.pass() ? "bench: PASS" : "bench: FAIL") << " (" << rep.entries.size() << " problems)\n";
  if (!out.empty()) write_file(out, rep.to_json().dump(2) + "\n");
  return rep.pass() ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Short-step-chain Frank-Wolfe solver and certifier"};
  app.require_subcommand(1);

  std::string config, out, trace, atoms, suite;
  double M = 1.0, theta = 0.5, f_star = 0.0;

  auto* solve = app.add_subcommand("solve", "run a configured problem and write its trace");
  solve->add_option("config", config, "problem config JSON")->required();
  solve->add_option("-o,--out", out, "output prefix for <prefix>.csv and <prefix>.summary.json");

  auto* verify = app.add_subcommand("verify", "certify the descent inequalities of a written trace");
  verify->add_option("trace", trace, "trace CSV")->required();

  auto* rates = app.add_subcommand("rates", "certify KL rate bounds on a written trace");
  rates->add_option("trace", trace, "trace CSV")->required();
  rates->add_option("--M", M, "desingularizer constant")->required();
  rates->add_option("--theta", theta, "desingularizer exponent in (0, 1/2]")->required();
  auto* fstar_opt = rates->add_option("--fstar", f_star, "optimal value (default: smallest recorded value)");

  auto* pwidth = app.add_subcommand("pwidth", "brute-force pyramidal width of a small atom set");
  pwidth->add_option("atoms", atoms, "JSON file with an \"atoms\" array")->required();

  auto* bench = app.add_subcommand("bench", "run a suite and print a summary table");
  bench->add_option("suite", suite, "suite JSON")->required();
  bench->add_option("-o,--out", out, "write the report JSON here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*solve) return cmd_solve(config, out);
    if (*verify) return cmd_verify(trace);
    if (*rates) return cmd_rates(trace, M, theta, fstar_opt->count() ? std::optional<double>(f_star) : std::nullopt);
    if (*pwidth) return cmd_pwidth(atoms);
    if (*bench) return cmd_bench(suite, out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
