#pragma once

#include "sscfw/kl_rates.hpp"
#include "sscfw/ssc.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace sscfw {

using Json = nlohmann::json;

inline constexpr const char* kConfigSchema = "ssc-fw/config@1";
inline constexpr const char* kSuiteSchema = "ssc-fw/suite@1";
inline constexpr const char* kSummarySchema = "ssc-fw/summary@1";

struct ProblemConfig {
  std::string name;
  Json domain;
  Json objective;
  Json method;
  std::optional<double> L;
  double eps_stat = 1e-8;
  int max_iter = 1000;
  std::optional<double> user_tau;
  std::uint64_t seed = 1;
  std::optional<Vec> x0;
  Json raw;

  std::uint64_t hash() const;
};

ProblemConfig parse_config(const Json& j);
ProblemConfig load_config(const std::string& path);

Domain build_domain(const Json& spec, std::uint64_t seed);
MethodSpec build_method(const Json& spec, const Domain& dom);

// Q = U diag(λ) Uᵀ with U a seeded random orthogonal matrix; λ spans [mu, L] with both ends attained.
Mat random_spd(int n, std::uint64_t seed, double mu, double L);
// Spectrum spans [−1, 1] with both ends attained.
Mat random_indefinite(int n, std::uint64_t seed);
Vec random_vector(int n, std::uint64_t seed, double scale);

struct Problem {
  Objective objective;
  Domain domain;
  MethodSpec method;
  Vec x0;
  double tau = 0.5;
  OuterOptions options;
  std::uint64_t config_hash = 0;
  Mat Q;  // quadratic objectives only
  Vec b;
};

Problem generate_problem(const ProblemConfig& cfg);
RunTrace solve_problem(const Problem& prob);

std::uint64_t fnv1a64(const std::string& bytes);

struct TraceRow {
  int k = 0;
  double f = 0.0;
  double gap_proxy = 0.0;
  int inner_steps = 0;
  Termination termination = Termination::Case1;
  double pi_tilde = 0.0;
  double cum_len = 0.0;
  double wall_ms = 0.0;
};

struct TraceAux {
  std::vector<double> f_tr, f_tilde, tilde_dist, step_len;
};

std::vector<TraceRow> trace_rows(const RunTrace& run);
TraceAux trace_aux(const RunTrace& run);
std::string format_trace_csv(const std::vector<TraceRow>& rows);
std::vector<TraceRow> parse_trace_csv(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);
// prefix.csv → prefix.summary.json
std::string summary_path_for(const std::string& csv_path);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};
LinearFit least_squares_fit(const std::vector<double>& x, const std::vector<double>& y);
// log₁₀(f_k − f*) against k over the last half of the gaps above 1e3·ε·(1+|f*|).
LinearFit log_gap_fit(const std::vector<double>& f, double f_star);

Json report_to_json(const CertificationReport& rep);
Json summary_json(const ProblemConfig& cfg, const Problem& prob, const RunTrace& run, const std::string& csv_text,
                  const CertificationReport& rep);

struct SolveOutput {
  RunTrace run;
  CertificationReport report;
  std::string csv_path, summary_path;
};
SolveOutput solve_to_files(const ProblemConfig& cfg, const std::string& prefix);

namespace check_names {
inline constexpr const char* kTraceIntegrity = "trace-integrity";
inline constexpr const char* kObjectiveContinuity = "objective-continuity";
}  // namespace check_names

// Certifies a persisted trace from the CSV and its summary alone.
CertificationReport verify_trace_files(const std::string& csv_path);
CertificationReport verify_trace_text(const std::string& csv_text, const Json& summary);

struct RatesOutput {
  RateCertificate objective_rate, tail_length;
  double f_star = 0.0;
  RateConstants constants;
  bool pass() const { return objective_rate.pass() && tail_length.pass(); }
};
RatesOutput rates_from_files(const std::string& csv_path, double M, double theta, std::optional<double> f_star);

struct BenchEntry {
  std::string name;
  std::string domain;
  std::string method;
  int iterations = 0;
  bool converged = false;
  double f_final = 0.0;
  double tau = 0.0;
  bool certified = false;
  LinearFit fit;
  double wall_ms = 0.0;
  CertificationReport report;
  std::string error;
};

struct BenchReport {
  std::string suite;
  std::vector<BenchEntry> entries;
  bool pass() const;
  std::string table() const;
  Json to_json() const;
};

// Worker count: SSC_FW_THREADS when set, else hardware concurrency, capped by the job count.
int bench_threads(int jobs);
BenchReport run_bench(const std::vector<ProblemConfig>& configs, const std::string& suite_name, int threads);
std::vector<ProblemConfig> load_suite(const std::string& path, std::string* suite_name = nullptr);

}  // namespace sscfw
