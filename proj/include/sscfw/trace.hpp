#pragma once

#include "sscfw/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sscfw {

enum class Termination { Stationary, Case1, Case2, Case3, Case4 };

const char* to_string(Termination t);
Termination termination_from_string(const std::string& s);

struct OuterStepRecord {
  int k = 0;
  Vec x_k;
  Vec x_tr;
  Vec x_tilde;
  double f_k = 0.0;
  double f_tr = 0.0;
  double f_tilde = 0.0;
  int inner_steps = 0;
  Termination termination_case = Termination::Case1;
  double proj_grad_at_tilde = 0.0;
  double wall_ms = 0.0;  // elapsed since the run started, at the end of this iteration
};

struct RunTrace {
  std::vector<OuterStepRecord> records;
  std::uint64_t config_hash = 0;
  double wall_time = 0.0;  // seconds
  double L = 1.0;
  double tau = 1.0;
  bool converged = false;  // stopping proxy reached eps_stat or a stationary point was found

  double K() const { return tau / (L * (1.0 + tau)); }
  double f0() const { return records.front().f_k; }
  double f_final() const { return records.back().f_tr; }
};

}  // namespace sscfw
