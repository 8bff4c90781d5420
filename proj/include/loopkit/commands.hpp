#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "loopkit/report.hpp"

namespace loopkit {

struct RunConfig {
  std::string model_path;
  std::string spec_path;
  std::uint64_t seed = 42;
  std::size_t samples = 100000;
  unsigned threads = 1;
  std::vector<double> n_list;   // overrides the spec file
  std::optional<double> alpha;  // overrides the spec file
  // simulate: per-loop JSON records of the first dump_limit loops drawn
  std::string dump_loops;
  std::size_t dump_limit = 1000;
};

// Each command returns its report with `pass` set from the verdicts; input
// problems are thrown as loopkit::Error.

/// Identity and assumption suite on the model file alone.
Report cmd_check(const RunConfig& config);
/// One row per spec: mu-moment (alpha = 0), nu-moment (alpha > 0) or the
/// rooted moment when the spec names a root.
Report cmd_moments(const RunConfig& config);
/// Monte Carlo against the analytic moments; finite chains only.
Report cmd_simulate(const RunConfig& config);
/// Laplace-moment convergence of the subordinated models.
Report cmd_subordination(const RunConfig& config);
/// Paired rotation-invariance test; finite chains only.
Report cmd_invariance(const RunConfig& config);

}  // namespace loopkit
