#include "locoplan/com_spline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

namespace locoplan {

namespace {

Eigen::Matrix<double, 6, 1> position_basis(double t) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t;
  return (Eigen::Matrix<double, 6, 1>() << t5, t4, t3, t2, t, 1.0).finished();
}

Eigen::Matrix<double, 6, 1> velocity_basis(double t) {
  const double t2 = t * t, t3 = t2 * t, t4 = t3 * t;
  return (Eigen::Matrix<double, 6, 1>() << 5.0 * t4, 4.0 * t3, 3.0 * t2, 2.0 * t, 1.0, 0.0)
      .finished();
}

Eigen::Matrix<double, 6, 1> acceleration_basis(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return (Eigen::Matrix<double, 6, 1>() << 20.0 * t3, 12.0 * t2, 6.0 * t, 2.0, 0.0, 0.0)
      .finished();
}

std::vector<Vec2> feet_xy(const std::vector<Vec3>& feet) {
  std::vector<Vec2> xy;
  xy.reserve(feet.size());
  for (const auto& f : feet) xy.push_back(f.head<2>());
  return xy;
}

}  // namespace

double PhasePlan::total_duration() const {
  double t = 0.0;
  for (const auto& p : phases) t += p.duration;
  return t;
}

PhasePlan build_phase_plan(const FootholdPlan& plan, const std::array<Vec3, 4>& initial_stance,
                           double swing_duration, double margin, double sample_dt) {
  if (plan.steps.empty()) throw std::invalid_argument("build_phase_plan: empty foothold plan");
  if (swing_duration <= 0.0)
    throw std::invalid_argument("build_phase_plan: swing duration must be > 0");
  if (margin < 0.0) throw std::invalid_argument("build_phase_plan: negative margin");
  if (sample_dt <= 0.0) throw std::invalid_argument("build_phase_plan: sample_dt must be > 0");

  PhasePlan out;
  out.margin = margin;
  out.swing_duration = swing_duration;
  out.sample_dt = sample_dt;
  const double four_leg = margin * swing_duration;

  std::array<Vec3, 4> feet = initial_stance;
  for (std::size_t k = 0; k < plan.steps.size(); ++k) {
    const auto& step = plan.steps[k];

    if (k > 0 && four_leg > 0.0 &&
        diagonal_opposite(plan.steps[k - 1].leg) == step.leg) {
      ComPhase bridge;
      bridge.kind = ComPhaseKind::FourLegSupport;
      bridge.duration = four_leg;
      bridge.support_feet.assign(feet.begin(), feet.end());
      bridge.support_lines = shrunk_support_lines(feet_xy(bridge.support_feet), margin);
      out.phases.push_back(std::move(bridge));
    }

    ComPhase swing;
    swing.kind = ComPhaseKind::Swing;
    swing.swing_leg = step.leg;
    swing.duration = swing_duration;
    for (int leg = 0; leg < 4; ++leg)
      if (leg != static_cast<int>(step.leg)) swing.support_feet.push_back(feet[leg]);
    try {
      swing.support_lines = shrunk_support_lines(feet_xy(swing.support_feet), margin);
    } catch (const std::invalid_argument& e) {
      throw PlannerError(std::string("build_phase_plan: margin too large for a support "
                                     "triangle: ") +
                         e.what());
    }
    out.phases.push_back(std::move(swing));
    feet[static_cast<int>(step.leg)] = step.position;
  }
  return out;
}

double QuinticSpline::total_duration() const {
  double t = 0.0;
  for (const auto& p : phases) t += p.duration;
  return t;
}

QuinticSpline::Sample QuinticSpline::sample(double t) const {
  Sample out;
  if (phases.empty()) return out;
  t = std::clamp(t, 0.0, total_duration());
  double start = 0.0;
  for (const auto& phase : phases) {
    if (t <= start + phase.duration || &phase == &phases.back()) {
      const double local = std::clamp(t - start, 0.0, phase.duration);
      out.position = {phase.x_coeffs.dot(position_basis(local)),
                      phase.y_coeffs.dot(position_basis(local))};
      out.velocity = {phase.x_coeffs.dot(velocity_basis(local)),
                      phase.y_coeffs.dot(velocity_basis(local))};
      out.acceleration = {phase.x_coeffs.dot(acceleration_basis(local)),
                          phase.y_coeffs.dot(acceleration_basis(local))};
      return out;
    }
    start += phase.duration;
  }
  return out;
}

Vec2 QuinticSpline::cop(double t, double height, double gravity) const {
  const Sample s = sample(t);
  return s.position - (height / gravity) * s.acceleration;
}

double QuinticSpline::objective(const SplineWeights& weights) const {
  double sum = 0.0;
  for (const auto& p : phases) {
    const auto gram = acceleration_gram(p.duration);
    sum += weights.forward * p.x_coeffs.dot(gram * p.x_coeffs) +
           weights.lateral * p.y_coeffs.dot(gram * p.y_coeffs);
  }
  return sum;
}

void QuinticSpline::export_csv(const std::string& path, double height, double dt,
                               double gravity) const {
  if (dt <= 0.0) throw std::invalid_argument("QuinticSpline::export_csv: dt must be > 0");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("QuinticSpline::export_csv: cannot open " + path);
  out << "t,x,y,xd,yd,xdd,ydd,px,py,phase_id\n";
  char buf[256];
  double start = 0.0;
  for (std::size_t i = 0; i < phases.size(); ++i) {
    const bool last = i + 1 == phases.size();
    for (double local = 0.0; local < phases[i].duration || (last && local == phases[i].duration);
         local += dt) {
      const double t = start + std::min(local, phases[i].duration);
      const Sample s = sample(t);
      const Vec2 p = cop(t, height, gravity);
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n",
                    t, s.position.x(), s.position.y(), s.velocity.x(), s.velocity.y(),
                    s.acceleration.x(), s.acceleration.y(), p.x(), p.y(), i);
      out << buf;
      if (last && local == phases[i].duration) break;
    }
    start += phases[i].duration;
  }
  const double t_end = total_duration();
  const Sample s = sample(t_end);
  const Vec2 p = cop(t_end, height, gravity);
  std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%zu\n",
                t_end, s.position.x(), s.position.y(), s.velocity.x(), s.velocity.y(),
                s.acceleration.x(), s.acceleration.y(), p.x(), p.y(), phases.size() - 1);
  out << buf;
}

Eigen::Matrix<double, 6, 6> acceleration_gram(double duration) {
  const double T = duration;
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T, T6 = T5 * T, T7 = T6 * T;
  Eigen::Matrix<double, 6, 6> g = Eigen::Matrix<double, 6, 6>::Zero();
  g(0, 0) = 400.0 * T7 / 7.0;
  g(0, 1) = g(1, 0) = 40.0 * T6;
  g(0, 2) = g(2, 0) = 24.0 * T5;
  g(0, 3) = g(3, 0) = 10.0 * T4;
  g(1, 1) = 144.0 * T5 / 5.0;
  g(1, 2) = g(2, 1) = 18.0 * T4;
  g(1, 3) = g(3, 1) = 8.0 * T3;
  g(2, 2) = 12.0 * T3;
  g(2, 3) = g(3, 2) = 6.0 * T2;
  g(3, 3) = 4.0 * T;
  return g;
}

qp::QpProblem assemble_qp(const PhasePlan& plan, const ComBoundary& start, double height,
                          const SplineWeights& weights, double gravity) {
  if (plan.phases.empty()) throw std::invalid_argument("assemble_qp: empty phase plan");
  if (height <= 0.0 || gravity <= 0.0)
    throw std::invalid_argument("assemble_qp: height and gravity must be > 0");

  const int phases = static_cast<int>(plan.phases.size());
  const int n = 12 * phases;
  const auto x_block = [](int phase) { return 12 * phase; };
  const auto y_block = [](int phase) { return 12 * phase + 6; };

  qp::QpProblem p;
  p.hessian = Eigen::MatrixXd::Zero(n, n);
  p.linear = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < phases; ++i) {
    const auto gram = acceleration_gram(plan.phases[i].duration);
    p.hessian.block<6, 6>(x_block(i), x_block(i)) = weights.forward * gram;
    p.hessian.block<6, 6>(y_block(i), y_block(i)) = weights.lateral * gram;
  }

  // Initial state and junction equalities, per axis.
  const int junctions = phases - 1;
  p.eq_matrix = Eigen::MatrixXd::Zero(6 + 6 * junctions, n);
  p.eq_rhs = Eigen::VectorXd::Zero(6 + 6 * junctions);
  int row = 0;
  auto add_initial = [&](const Eigen::Matrix<double, 6, 1>& basis, int block, double value) {
    p.eq_matrix.block<1, 6>(row, block) = basis.transpose();
    p.eq_rhs(row) = value;
    ++row;
  };
  add_initial(position_basis(0.0), x_block(0), start.position.x());
  add_initial(position_basis(0.0), y_block(0), start.position.y());
  add_initial(velocity_basis(0.0), x_block(0), start.velocity.x());
  add_initial(velocity_basis(0.0), y_block(0), start.velocity.y());
  add_initial(acceleration_basis(0.0), x_block(0), start.acceleration.x());
  add_initial(acceleration_basis(0.0), y_block(0), start.acceleration.y());
  for (int i = 0; i + 1 < phases; ++i) {
    const double T = plan.phases[i].duration;
    for (const auto& basis : {position_basis, velocity_basis, acceleration_basis}) {
      for (const int off : {0, 6}) {  // x then y block
        p.eq_matrix.block<1, 6>(row, 12 * i + off) = basis(T).transpose();
        p.eq_matrix.block<1, 6>(row, 12 * (i + 1) + off) = -basis(0.0).transpose();
        ++row;
      }
    }
  }

  // COP line constraints at every owned sample. A phase owns its local
  // samples in [0, T); the terminal instant belongs to the last phase.
  std::vector<Eigen::VectorXd> rows;
  std::vector<double> rhs;
  const double cart = height / gravity;
  for (int i = 0; i < phases; ++i) {
    const auto& phase = plan.phases[i];
    std::vector<double> times;
    for (double t = 0.0; t < phase.duration - 1e-12; t += plan.sample_dt) times.push_back(t);
    if (i + 1 == phases) times.push_back(phase.duration);
    for (const double t : times) {
      const Eigen::Matrix<double, 6, 1> cop_basis =
          position_basis(t) - cart * acceleration_basis(t);
      for (const auto& line : phase.support_lines) {
        Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
        r.segment<6>(x_block(i)) = line.a * cop_basis;
        r.segment<6>(y_block(i)) = line.b * cop_basis;
        rows.push_back(std::move(r));
        rhs.push_back(-line.c);
      }
    }
  }
  p.ineq_matrix.resize(static_cast<int>(rows.size()), n);
  p.ineq_rhs.resize(static_cast<int>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    p.ineq_matrix.row(static_cast<int>(k)) = rows[k].transpose();
    p.ineq_rhs(static_cast<int>(k)) = rhs[k];
  }
  return p;
}

QuinticSpline generate_com_trajectory(const PhasePlan& plan, const ComBoundary& start,
                                      double height, const SplineWeights& weights, double gravity,
                                      double qp_tolerance) {
  const auto problem = assemble_qp(plan, start, height, weights, gravity);
  const auto solution = qp::solve(problem, qp_tolerance);
  if (solution.status == qp::QpStatus::Infeasible)
    throw PlannerError(
        "generate_com_trajectory: infeasible COP constraints; increase the swing duration or "
        "reduce the stability margin");
  if (solution.status != qp::QpStatus::Optimal)
    throw PlannerError("generate_com_trajectory: QP did not converge");

  QuinticSpline spline;
  for (std::size_t i = 0; i < plan.phases.size(); ++i) {
    QuinticSpline::Phase phase;
    phase.duration = plan.phases[i].duration;
    phase.x_coeffs = solution.x.segment<6>(12 * i);
    phase.y_coeffs = solution.x.segment<6>(12 * i + 6);
    spline.phases.push_back(phase);
  }

  // A-posteriori validation: junction continuity and COP slack at the samples.
  double t_junction = 0.0;
  for (std::size_t i = 0; i + 1 < spline.phases.size(); ++i) {
    t_junction += spline.phases[i].duration;
    const auto before = spline.sample(t_junction - 1e-13);
    const auto after = spline.sample(t_junction + 1e-13);
    if ((before.position - after.position).norm() > 1e-7 ||
        (before.velocity - after.velocity).norm() > 1e-7 ||
        (before.acceleration - after.acceleration).norm() > 1e-6)
      throw PlannerError("generate_com_trajectory: junction continuity violated");
  }
  double phase_start = 0.0;
  for (std::size_t i = 0; i < plan.phases.size(); ++i) {
    const auto& phase = plan.phases[i];
    std::vector<double> times;
    for (double t = 0.0; t < phase.duration - 1e-12; t += plan.sample_dt) times.push_back(t);
    if (i + 1 == plan.phases.size()) times.push_back(phase.duration);
    for (const double t : times) {
      const Vec2 cop = spline.cop(phase_start + t, height, gravity);
      if (min_slack(phase.support_lines, cop) < -1e-6)
        throw PlannerError("generate_com_trajectory: COP left the shrunk support region");
    }
    phase_start += phase.duration;
  }
  return spline;
}

std::vector<Vec3> swing_profile(const Vec3& start, const Vec3& goal, double lift, int samples,
                                double outward) {
  if (lift < 0.0) throw std::invalid_argument("swing_profile: negative lift");
  if (samples < 2) throw std::invalid_argument("swing_profile: need at least 2 samples");

  const double climb = std::max(0.0, goal.z() - start.z());
  const double bump = lift + climb;
  const Vec2 travel = (goal - start).head<2>();
  Vec2 side = Vec2::Zero();
  if (outward > 0.0 && goal.z() > start.z() && travel.norm() > 1e-12) {
    const Vec2 dir = travel.normalized();
    side = Vec2(-dir.y(), dir.x()) * outward;
  }

  std::vector<Vec3> path;
  path.reserve(samples);
  for (int k = 0; k < samples; ++k) {
    const double s = static_cast<double>(k) / (samples - 1);
    if (k == 0) {
      path.push_back(start);
      continue;
    }
    if (k == samples - 1) {
      path.push_back(goal);
      continue;
    }
    const double arc = std::sin(std::numbers::pi * s);
    Vec3 p = start + (goal - start) * s;
    p.head<2>() += side * arc;
    p.z() += bump * arc;
    path.push_back(p);
  }
  return path;
}

}  // namespace locoplan
