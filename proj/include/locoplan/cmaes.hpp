#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace locoplan {
namespace cmaes {

struct CmaConfig {
  int dimension = 0;
  int population = 0;  // 0 -> 4 + floor(3 ln d)
  double initial_step = 0.3;
  Eigen::VectorXd lower;  // empty = unbounded
  Eigen::VectorXd upper;
  int max_evaluations = 20000;
  double target_value = -std::numeric_limits<double>::infinity();
  double tol_fun = 0.0;  // 0 disables the function-spread stop
  std::uint64_t seed = 0;
  double bound_penalty = 1e6;
  int resample_attempts = 100;
  std::string trace_csv;  // per-generation CSV when non-empty

  bool bounded() const { return lower.size() > 0; }
  void validate() const;
};

enum class StopReason { TargetReached, MaxEvaluations, FunctionTolerance };

struct TraceEntry {
  int generation = 0;
  int evaluations = 0;
  double best = 0.0;        // best of the generation
  double median = 0.0;      // median of the generation
  double elite_mean = 0.0;  // mean of the mu best of the generation
  double best_so_far = 0.0;
  double step_size = 0.0;
};

struct CmaResult {
  Eigen::VectorXd best_point;
  double best_value = std::numeric_limits<double>::infinity();
  int evaluations = 0;
  StopReason termination = StopReason::MaxEvaluations;
  std::vector<TraceEntry> trace;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Rank-mu CMA-ES minimizer with cumulative step-size adaptation. Bounds are
/// enforced by resampling, then coordinate-wise clipping plus a quadratic
/// out-of-bounds penalty on the ranking value; every evaluated and returned
/// point satisfies the bounds exactly. Deterministic given the seed. The
/// objective must return finite values or +inf; candidate evaluations within a
/// generation are independent, so the objective has to be safe for concurrent
/// calls.
CmaResult optimize(const Objective& objective, const Eigen::VectorXd& x0, const CmaConfig& config);

}  // namespace cmaes
}  // namespace locoplan
