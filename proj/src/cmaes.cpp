#include "locoplan/cmaes.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>

namespace locoplan {
namespace cmaes {

void CmaConfig::validate() const {
  if (dimension < 1) throw std::invalid_argument("CmaConfig: dimension must be >= 1");
  if (population != 0 && population < 4)
    throw std::invalid_argument("CmaConfig: population must be >= 4");
  if (!(initial_step > 0.0)) throw std::invalid_argument("CmaConfig: initial_step must be > 0");
  if (max_evaluations < 1) throw std::invalid_argument("CmaConfig: max_evaluations must be >= 1");
  if (lower.size() != upper.size())
    throw std::invalid_argument("CmaConfig: lower/upper bound sizes differ");
  if (bounded()) {
    if (lower.size() != dimension)
      throw std::invalid_argument("CmaConfig: bound size does not match dimension");
    for (int i = 0; i < dimension; ++i)
      if (!(lower(i) < upper(i)))
        throw std::invalid_argument("CmaConfig: lower bound must be below upper bound");
  }
  if (resample_attempts < 0) throw std::invalid_argument("CmaConfig: negative resample_attempts");
  if (bound_penalty < 0.0) throw std::invalid_argument("CmaConfig: negative bound_penalty");
}

namespace {

// Standard normal draws from the engine's raw 64-bit output; libstdc++'s
// std::normal_distribution is not pinned by the standard, this is.
class NormalSource {
 public:
  explicit NormalSource(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = uniform01();
    while (u1 <= 1e-300) u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

struct Candidate {
  Eigen::VectorXd x;      // evaluated (in-bounds) point
  double value = 0.0;     // raw objective
  double ranking = 0.0;   // objective + bound penalty
  int index = 0;
};

}  // namespace

CmaResult optimize(const Objective& objective, const Eigen::VectorXd& x0,
                   const CmaConfig& config) {
  config.validate();
  const int d = config.dimension;
  if (x0.size() != d) throw std::invalid_argument("cmaes::optimize: x0 size mismatch");
  if (config.bounded()) {
    for (int i = 0; i < d; ++i)
      if (x0(i) < config.lower(i) || x0(i) > config.upper(i))
        throw std::invalid_argument("cmaes::optimize: x0 violates bounds");
  }

  const int lambda = config.population > 0
                         ? config.population
                         : 4 + static_cast<int>(std::floor(3.0 * std::log(d)));
  const int mu = lambda / 2;

  Eigen::VectorXd weights(mu);
  for (int i = 0; i < mu; ++i) weights(i) = std::log(mu + 0.5) - std::log(i + 1.0);
  weights /= weights.sum();
  const double mu_eff = 1.0 / weights.squaredNorm();

  const double c_sigma = (mu_eff + 2.0) / (d + mu_eff + 5.0);
  const double d_sigma =
      1.0 + 2.0 * std::max(0.0, std::sqrt((mu_eff - 1.0) / (d + 1.0)) - 1.0) + c_sigma;
  const double c_cov_path = (4.0 + mu_eff / d) / (d + 4.0 + 2.0 * mu_eff / d);
  const double c_rank1 = 2.0 / ((d + 1.3) * (d + 1.3) + mu_eff);
  const double c_rankmu = std::min(
      1.0 - c_rank1, 2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((d + 2.0) * (d + 2.0) + mu_eff));
  const double chi_n = std::sqrt(static_cast<double>(d)) *
                       (1.0 - 1.0 / (4.0 * d) + 1.0 / (21.0 * d * d));

  Eigen::VectorXd mean = x0;
  double sigma = config.initial_step;
  Eigen::MatrixXd cov = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd path_sigma = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd path_cov = Eigen::VectorXd::Zero(d);

  NormalSource rng(config.seed);
  CmaResult result;
  result.best_point = x0;

  auto evaluate = [&](const Eigen::VectorXd& x) {
    const double v = objective(x);
    ++result.evaluations;
    if (std::isnan(v) || v == -std::numeric_limits<double>::infinity())
      throw std::runtime_error("cmaes::optimize: objective returned an invalid value");
    return v;
  };

  std::vector<Candidate> population(lambda);
  Eigen::MatrixXd basis = Eigen::MatrixXd::Identity(d, d);
  Eigen::VectorXd scales = Eigen::VectorXd::Ones(d);

  std::ofstream trace_out;
  if (!config.trace_csv.empty()) {
    trace_out.open(config.trace_csv);
    if (!trace_out)
      throw std::runtime_error("cmaes::optimize: cannot open trace file " + config.trace_csv);
    trace_out << "generation,evaluations,best,median,best_so_far,sigma\n";
  }

  int generation = 0;
  bool stop = false;
  while (!stop) {
    // Eigen-repair keeps the sampling covariance symmetric positive definite.
    cov = 0.5 * (cov + cov.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    Eigen::VectorXd evals = eig.eigenvalues();
    const double max_eval = std::max(evals.maxCoeff(), 1e-300);
    bool repaired = false;
    for (int i = 0; i < d; ++i) {
      if (evals(i) < 1e-14 * max_eval) {
        evals(i) = 1e-14 * max_eval;
        repaired = true;
      }
    }
    basis = eig.eigenvectors();
    scales = evals.cwiseSqrt();
    if (repaired) cov = basis * evals.asDiagonal() * basis.transpose();
    if (!(evals.minCoeff() > 0.0))
      throw std::runtime_error("cmaes::optimize: covariance lost positive definiteness");

    const int budget_left = config.max_evaluations - result.evaluations;
    const int batch = std::min(lambda, budget_left);

    for (int k = 0; k < batch; ++k) {
      Eigen::VectorXd x(d);
      bool inside = false;
      for (int attempt = 0; attempt <= config.resample_attempts && !inside; ++attempt) {
        Eigen::VectorXd z(d);
        for (int i = 0; i < d; ++i) z(i) = rng.next();
        x = mean + sigma * (basis * (scales.asDiagonal() * z));
        inside = true;
        if (config.bounded()) {
          for (int i = 0; i < d; ++i)
            if (x(i) < config.lower(i) || x(i) > config.upper(i)) {
              inside = false;
              break;
            }
        }
      }
      double penalty = 0.0;
      if (!inside) {
        const Eigen::VectorXd clipped = x.cwiseMax(config.lower).cwiseMin(config.upper);
        penalty = config.bound_penalty * (x - clipped).squaredNorm();
        x = clipped;
      }
      Candidate& c = population[k];
      c.x = x;
      c.value = evaluate(x);
      c.ranking = c.value + penalty;
      c.index = k;
      if (c.value < result.best_value) {
        result.best_value = c.value;
        result.best_point = c.x;
      }
    }

    if (batch < lambda) {
      result.termination = StopReason::MaxEvaluations;
      break;
    }

    std::sort(population.begin(), population.end(), [](const Candidate& a, const Candidate& b) {
      if (a.ranking != b.ranking) return a.ranking < b.ranking;
      return a.index < b.index;
    });

    const Eigen::VectorXd old_mean = mean;
    mean = Eigen::VectorXd::Zero(d);
    for (int i = 0; i < mu; ++i) mean += weights(i) * population[i].x;

    const Eigen::VectorXd mean_step = (mean - old_mean) / sigma;
    const Eigen::VectorXd whitened =
        basis * scales.cwiseInverse().asDiagonal() * (basis.transpose() * mean_step);
    path_sigma = (1.0 - c_sigma) * path_sigma +
                 std::sqrt(c_sigma * (2.0 - c_sigma) * mu_eff) * whitened;

    const double expected_decay =
        std::sqrt(1.0 - std::pow(1.0 - c_sigma, 2.0 * (generation + 1)));
    const bool h_sigma =
        path_sigma.norm() / expected_decay < (1.4 + 2.0 / (d + 1.0)) * chi_n;
    path_cov = (1.0 - c_cov_path) * path_cov;
    if (h_sigma)
      path_cov += std::sqrt(c_cov_path * (2.0 - c_cov_path) * mu_eff) * mean_step;

    Eigen::MatrixXd rank_mu = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < mu; ++i) {
      const Eigen::VectorXd y = (population[i].x - old_mean) / sigma;
      rank_mu += weights(i) * y * y.transpose();
    }
    const double rank1_correction = h_sigma ? 0.0 : c_cov_path * (2.0 - c_cov_path);
    cov = (1.0 - c_rank1 - c_rankmu) * cov +
          c_rank1 * (path_cov * path_cov.transpose() + rank1_correction * cov) +
          c_rankmu * rank_mu;

    sigma *= std::exp((c_sigma / d_sigma) * (path_sigma.norm() / chi_n - 1.0));

    // Generation stats (ranking order is already sorted).
    std::vector<double> values(lambda);
    for (int i = 0; i < lambda; ++i) values[i] = population[i].ranking;
    double elite_mean = 0.0;
    for (int i = 0; i < mu; ++i) elite_mean += values[i];
    elite_mean /= mu;
    TraceEntry entry;
    entry.generation = generation;
    entry.evaluations = result.evaluations;
    entry.best = values.front();
    entry.elite_mean = elite_mean;
    entry.median = lambda % 2 == 1 ? values[lambda / 2]
                                   : 0.5 * (values[lambda / 2 - 1] + values[lambda / 2]);
    entry.best_so_far = result.best_value;
    entry.step_size = sigma;
    result.trace.push_back(entry);
    if (trace_out) {
      char buf[160];
      std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%.17g,%.17g,%.17g\n", entry.generation,
                    entry.evaluations, entry.best, entry.median, entry.best_so_far,
                    entry.step_size);
      trace_out << buf;
    }

    ++generation;
    if (result.best_value <= config.target_value) {
      result.termination = StopReason::TargetReached;
      stop = true;
    } else if (result.evaluations >= config.max_evaluations) {
      result.termination = StopReason::MaxEvaluations;
      stop = true;
    } else if (config.tol_fun > 0.0 && values.back() - values.front() < config.tol_fun) {
      result.termination = StopReason::FunctionTolerance;
      stop = true;
    }
  }

  return result;
}

}  // namespace cmaes
}  // namespace locoplan
