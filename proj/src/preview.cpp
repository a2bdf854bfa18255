#include "locoplan/preview.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace locoplan {

double CartTableParams::omega() const { return std::sqrt(gravity / height); }

void CartTableParams::validate() const {
  if (height <= 0.0 || gravity <= 0.0)
    throw std::invalid_argument("CartTableParams: height and gravity must be > 0");
}

std::vector<Vec2> SupportRegion::active_feet() const {
  std::vector<Vec2> out;
  for (int i = 0; i < 4; ++i)
    if (active[i]) out.push_back(feet[i]);
  return out;
}

void SupportRegion::rebuild_lines() { lines = shrunk_support_lines(active_feet(), margin); }

Vec2 cop_at(const PreviewPhase& phase, const Vec2& start_cop, double t) {
  if (phase.duration <= 0.0) throw std::invalid_argument("cop_at: phase duration must be > 0");
  if (t < 0.0 || t > phase.duration * (1.0 + 1e-12))
    throw std::invalid_argument("cop_at: time outside the phase");
  return start_cop + phase.cop_shift * (t / phase.duration);
}

ComSample com_trajectory(const Vec2& com0, const Vec2& vel0, const Vec2& cop0,
                         const PreviewPhase& phase, const CartTableParams& params, double t) {
  params.validate();
  const double T = phase.duration;
  if (T <= 0.0) throw std::invalid_argument("com_trajectory: phase duration must be > 0");
  if (t < 0.0 || t > T * (1.0 + 1e-12))
    throw std::invalid_argument("com_trajectory: time outside the phase");

  const double w = params.omega();
  const Vec2 half_offset = (com0 - cop0) / 2.0;
  const Vec2 drift = (vel0 * T - phase.cop_shift) / (2.0 * w * T);
  const Vec2 grow = half_offset + drift;
  const Vec2 decay = half_offset - drift;

  const double ep = std::exp(w * t);
  const double en = std::exp(-w * t);
  ComSample s;
  s.position = grow * ep + decay * en + cop0 + phase.cop_shift * (t / T);
  s.velocity = w * (grow * ep - decay * en) + phase.cop_shift / T;
  return s;
}

ComSample com_trajectory(const PreviewState& s0, const PreviewPhase& phase,
                         const CartTableParams& params, double t) {
  return com_trajectory(s0.com, s0.com_vel, s0.cop, phase, params, t);
}

std::vector<PreviewState> rollout(const PreviewState& s0, const ControlSequence& controls,
                                  double margin, const CartTableParams& params,
                                  const NominalStance& stance) {
  params.validate();
  if (!s0.com.allFinite() || !s0.com_vel.allFinite() || !s0.cop.allFinite())
    throw std::invalid_argument("rollout: non-finite initial state");
  for (const auto& phase : controls.phases)
    if (phase.duration < 0.0) throw std::invalid_argument("rollout: negative phase duration");

  std::vector<PreviewState> states;
  PreviewState cur = s0;
  cur.support.margin = margin;

  for (const auto& phase : controls.phases) {
    if (phase.duration <= 0.0) continue;  // disabled phase

    if (phase.kind == PhaseKind::Swing) {
      const int leg = static_cast<int>(phase.swing_leg);
      cur.support.feet[leg] = cur.com + stance.offset(phase.swing_leg) + phase.foot_shift;
      cur.support.active = {true, true, true, true};
      cur.support.active[leg] = false;
    } else {
      cur.support.active = {true, true, true, true};
    }
    cur.support.rebuild_lines();
    states.push_back(cur);

    const ComSample end = com_trajectory(cur.com, cur.com_vel, cur.cop, phase, params, phase.duration);
    cur.cop = cop_at(phase, cur.cop, phase.duration);
    cur.com = end.position;
    cur.com_vel = end.velocity;
    cur.time += phase.duration;
  }

  cur.support.active = {true, true, true, true};
  cur.support.rebuild_lines();
  states.push_back(cur);
  return states;
}

double trunk_height_reference(std::span<const double> stance_heights, double clearance) {
  if (stance_heights.empty())
    throw std::invalid_argument("trunk_height_reference: no stance feet");
  double mean = 0.0;
  for (double z : stance_heights) mean += z;
  return mean / static_cast<double>(stance_heights.size()) + clearance;
}

PreviewState make_initial_state(const Vec2& com, const Vec2& com_vel, const NominalStance& stance,
                                double margin) {
  PreviewState s;
  s.com = com;
  s.com_vel = com_vel;
  s.cop = com;
  s.support.margin = margin;
  for (int i = 0; i < 4; ++i)
    s.support.feet[i] = com + stance.offset(static_cast<LegId>(i));
  s.support.rebuild_lines();
  return s;
}

void export_plan_csv(const std::vector<PreviewState>& states, const ControlSequence& controls,
                     const CartTableParams& params, double dt, const std::string& path) {
  if (dt <= 0.0) throw std::invalid_argument("export_plan_csv: dt must be > 0");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_plan_csv: cannot open " + path);
  out << "t,x,y,xd,yd,px,py,phase_id\n";

  char buf[200];
  auto write_row = [&](double t, const ComSample& s, const Vec2& cop, int id) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", t,
                  s.position.x(), s.position.y(), s.velocity.x(), s.velocity.y(), cop.x(), cop.y(),
                  id);
    out << buf;
  };

  std::size_t si = 0;
  for (std::size_t pi = 0; pi < controls.phases.size(); ++pi) {
    const auto& phase = controls.phases[pi];
    if (phase.duration <= 0.0) continue;
    const PreviewState& start = states.at(si);
    for (double t = 0.0; t < phase.duration; t += dt) {
      write_row(start.time + t, com_trajectory(start, phase, params, t),
                cop_at(phase, start.cop, t), static_cast<int>(pi));
    }
    ++si;
  }
  if (!states.empty()) {
    const PreviewState& last = states.back();
    write_row(last.time, {last.com, last.com_vel}, last.cop, -1);
  }
  if (!out) throw std::runtime_error("export_plan_csv: write failed for " + path);
}

}  // namespace locoplan
