#include "locoplan/attitude.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

namespace locoplan {

void InertiaModel::validate() const {
  if (mass <= 0.0 || gravity <= 0.0)
    throw std::invalid_argument("InertiaModel: mass and gravity must be > 0");
  if ((inertia - inertia.transpose()).cwiseAbs().maxCoeff() > 1e-9)
    throw std::invalid_argument("InertiaModel: inertia tensor must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(inertia);
  if (eig.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("InertiaModel: inertia tensor must be positive definite");
}

Vec2 cmp_shift(const InertiaModel& im, const Vec3& angular_acc) {
  if (!angular_acc.allFinite())
    throw std::invalid_argument("cmp_shift: non-finite angular acceleration");
  const Vec3 moment = im.inertia * angular_acc;
  // moment x e_z has components (moment_y, -moment_x, 0)
  return Vec2(moment.y(), -moment.x()) / (im.mass * im.gravity);
}

Vec2 max_angular_acceleration(const InertiaModel& im, double margin) {
  if (margin < 0.0) throw std::invalid_argument("max_angular_acceleration: negative margin");
  const double mg = im.mass * im.gravity;
  const double roll_gain = std::hypot(im.inertia(0, 0), im.inertia(1, 0));
  const double pitch_gain = std::hypot(im.inertia(0, 1), im.inertia(1, 1));
  return {margin * mg / roll_gain, margin * mg / pitch_gain};
}

RollPitch fit_support_plane(std::span<const Vec3> footholds) {
  if (footholds.size() < 3)
    throw std::invalid_argument("fit_support_plane: need at least 3 footholds");

  // Least squares of z = c0 + c1 x + c2 y over the footholds.
  Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
  Vec3 atz = Vec3::Zero();
  Vec2 mean_xy = Vec2::Zero();
  for (const auto& f : footholds) mean_xy += f.head<2>();
  mean_xy /= static_cast<double>(footholds.size());

  Eigen::Matrix2d xy_cov = Eigen::Matrix2d::Zero();
  for (const auto& f : footholds) {
    const Vec3 row(1.0, f.x(), f.y());
    ata += row * row.transpose();
    atz += row * f.z();
    const Vec2 d = f.head<2>() - mean_xy;
    xy_cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> spread(xy_cov);
  if (spread.eigenvalues()(0) <= 1e-12 * std::max(spread.eigenvalues()(1), 1e-300))
    throw std::invalid_argument("fit_support_plane: footholds are collinear");

  const Vec3 coeffs = ata.ldlt().solve(atz);
  Vec3 normal(-coeffs(1), -coeffs(2), 1.0);
  normal.normalize();
  return {std::atan2(-normal.y(), normal.z()), std::atan2(-normal.x(), normal.z())};
}

double AttitudeSpline::total_duration() const {
  double t = 0.0;
  for (const auto& s : segments) t += s.duration;
  return t;
}

namespace {
double eval_poly(const Eigen::Vector4d& c, double t, int derivative) {
  switch (derivative) {
    case 0: return c(0) + c(1) * t + c(2) * t * t + c(3) * t * t * t;
    case 1: return c(1) + 2.0 * c(2) * t + 3.0 * c(3) * t * t;
    default: return 2.0 * c(2) + 6.0 * c(3) * t;
  }
}

AttitudeSpline::Segment rest_to_rest(double roll0, double droll, double pitch0, double dpitch,
                                     double T) {
  AttitudeSpline::Segment seg;
  seg.duration = T;
  seg.roll_coeffs << roll0, 0.0, 3.0 * droll / (T * T), -2.0 * droll / (T * T * T);
  seg.pitch_coeffs << pitch0, 0.0, 3.0 * dpitch / (T * T), -2.0 * dpitch / (T * T * T);
  return seg;
}
}  // namespace

RollPitch AttitudeSpline::terminal() const {
  if (segments.empty()) return {};
  const auto& s = segments.back();
  return {eval_poly(s.roll_coeffs, s.duration, 0), eval_poly(s.pitch_coeffs, s.duration, 0)};
}

AttitudeSpline::Sample AttitudeSpline::sample(double t) const {
  Sample out;
  if (segments.empty()) return out;
  t = std::clamp(t, 0.0, total_duration());
  double start = 0.0;
  for (const auto& seg : segments) {
    if (t <= start + seg.duration || &seg == &segments.back()) {
      const double local = std::clamp(t - start, 0.0, seg.duration);
      out.roll = eval_poly(seg.roll_coeffs, local, 0);
      out.pitch = eval_poly(seg.pitch_coeffs, local, 0);
      out.roll_rate = eval_poly(seg.roll_coeffs, local, 1);
      out.pitch_rate = eval_poly(seg.pitch_coeffs, local, 1);
      out.roll_acc = eval_poly(seg.roll_coeffs, local, 2);
      out.pitch_acc = eval_poly(seg.pitch_coeffs, local, 2);
      return out;
    }
    start += seg.duration;
  }
  return out;
}

namespace {
AttitudeSpline plan_impl(const AttitudeState& current,
                         const std::function<RollPitch(std::size_t)>& target_of_phase,
                         const Vec2& accel_bounds, std::span<const double> phase_durations) {
  if (accel_bounds.x() <= 0.0 || accel_bounds.y() <= 0.0)
    throw std::invalid_argument("plan_attitude: acceleration bounds must be > 0");
  bool any = false;
  for (double T : phase_durations) any = any || T > 0.0;
  if (!any) throw std::invalid_argument("plan_attitude: no positive-duration phases");

  AttitudeSpline spline;
  double roll = current.roll;
  double pitch = current.pitch;
  RollPitch target{};
  for (std::size_t i = 0; i < phase_durations.size(); ++i) {
    const double T = phase_durations[i];
    target = target_of_phase(i);
    if (T <= 0.0) continue;
    // Peak acceleration of a rest-to-rest cubic is 6|d|/T^2.
    const double cap_roll = accel_bounds.x() * T * T / 6.0;
    const double cap_pitch = accel_bounds.y() * T * T / 6.0;
    const double droll = std::clamp(target.roll - roll, -cap_roll, cap_roll);
    const double dpitch = std::clamp(target.pitch - pitch, -cap_pitch, cap_pitch);
    spline.segments.push_back(rest_to_rest(roll, droll, pitch, dpitch, T));
    roll += droll;
    pitch += dpitch;
  }
  spline.complete =
      std::abs(target.roll - roll) <= 1e-9 && std::abs(target.pitch - pitch) <= 1e-9;
  return spline;
}
}  // namespace

AttitudeSpline plan_attitude(const AttitudeState& current, const RollPitch& target,
                             const Vec2& accel_bounds, std::span<const double> phase_durations) {
  return plan_impl(current, [&](std::size_t) { return target; }, accel_bounds, phase_durations);
}

AttitudeSpline plan_attitude_tracking(const AttitudeState& current,
                                      std::span<const RollPitch> targets, const Vec2& accel_bounds,
                                      std::span<const double> phase_durations) {
  if (targets.size() != phase_durations.size())
    throw std::invalid_argument("plan_attitude_tracking: one target per phase required");
  return plan_impl(current, [&](std::size_t i) { return targets[i]; }, accel_bounds,
                   phase_durations);
}

}  // namespace locoplan
