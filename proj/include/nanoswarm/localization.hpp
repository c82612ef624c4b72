#pragma once

// Per-agent Kalman filter over [x, y, vx, vy] fusing accelerometer input,
// optical-flow velocity and UWB peer ranges.

#include <cmath>

#include <Eigen/Dense>

#include "geometry.hpp"

namespace nanoswarm {

using StateVector = Eigen::Matrix<double, 4, 1>;
using StateCovariance = Eigen::Matrix<double, 4, 4>;

struct NoiseConfig {
  double process_accel_sigma = 0.2;  // m/s^2
  double flow_meas_sigma = 0.05;     // m/s
  double range_meas_sigma = 0.10;    // m
  double gate_sigmas = 5.0;

  void validate() const {
    if (!(process_accel_sigma > 0.0) || !(flow_meas_sigma > 0.0) || !(range_meas_sigma > 0.0))
      throw DomainError("filter noise parameters must be positive");
  }
};

struct EkfState {
  StateVector mean = StateVector::Zero();
  StateCovariance covariance = StateCovariance::Identity() * 1e-4;
  double time = 0.0;
  // Range updates rejected by the innovation gate / skipped as degenerate.
  int gated_updates = 0;
  int degenerate_updates = 0;

  Vec2 position() const { return {mean(0), mean(1)}; }
  Vec2 velocity() const { return {mean(2), mean(3)}; }

  static EkfState at_takeoff(Vec2 p, double position_sigma = 0.01, double velocity_sigma = 0.01) {
    EkfState s;
    s.mean << p.x, p.y, 0.0, 0.0;
    s.covariance.setZero();
    s.covariance.diagonal() << position_sigma * position_sigma, position_sigma * position_sigma,
        velocity_sigma * velocity_sigma, velocity_sigma * velocity_sigma;
    return s;
  }
};

namespace detail {

inline void symmetrize(StateCovariance& p) { p = 0.5 * (p + p.transpose()).eval(); }

// Joseph-form update for a measurement with Jacobian h (rows) and noise r.
template <int M>
void joseph_update(EkfState& state, const Eigen::Matrix<double, M, 4>& h, const Eigen::Matrix<double, M, 1>& innovation,
                   const Eigen::Matrix<double, M, M>& r) {
  const Eigen::Matrix<double, M, M> s = h * state.covariance * h.transpose() + r;
  const Eigen::Matrix<double, 4, M> k = state.covariance * h.transpose() * s.inverse();
  state.mean += k * innovation;
  const StateCovariance i_kh = StateCovariance::Identity() - k * h;
  state.covariance = i_kh * state.covariance * i_kh.transpose() + k * r * k.transpose();
  symmetrize(state.covariance);
}

}  // namespace detail

inline StateCovariance process_noise(double dt, double accel_sigma) {
  const double q = accel_sigma * accel_sigma;
  const double dt2 = dt * dt;
  const double a = dt2 * dt2 / 4.0;
  const double b = dt2 * dt / 2.0;
  StateCovariance qm = StateCovariance::Zero();
  qm(0, 0) = qm(1, 1) = a * q;
  qm(0, 2) = qm(2, 0) = qm(1, 3) = qm(3, 1) = b * q;
  qm(2, 2) = qm(3, 3) = dt2 * q;
  return qm;
}

inline EkfState predict(const EkfState& state, Vec2 accel_body, double heading, double dt,
                        const NoiseConfig& noise = {}) {
  if (!(dt > 0.0)) throw DomainError("predict step must be positive");
  const Vec2 a = rotate(accel_body, heading);
  EkfState out = state;
  StateCovariance f = StateCovariance::Identity();
  f(0, 2) = f(1, 3) = dt;
  out.mean(0) += state.mean(2) * dt + 0.5 * a.x * dt * dt;
  out.mean(1) += state.mean(3) * dt + 0.5 * a.y * dt * dt;
  out.mean(2) += a.x * dt;
  out.mean(3) += a.y * dt;
  out.covariance = f * state.covariance * f.transpose() + process_noise(dt, noise.process_accel_sigma);
  detail::symmetrize(out.covariance);
  out.time = state.time + dt;
  return out;
}

inline EkfState update_flow(const EkfState& state, Vec2 flow_body, double heading, const NoiseConfig& noise = {}) {
  const Vec2 v = rotate(flow_body, heading);
  Eigen::Matrix<double, 2, 4> h = Eigen::Matrix<double, 2, 4>::Zero();
  h(0, 2) = h(1, 3) = 1.0;
  const Eigen::Vector2d innovation(v.x - state.mean(2), v.y - state.mean(3));
  const Eigen::Matrix2d r = Eigen::Matrix2d::Identity() * noise.flow_meas_sigma * noise.flow_meas_sigma;
  EkfState out = state;
  detail::joseph_update<2>(out, h, innovation, r);
  return out;
}

inline double predicted_range(const StateVector& mean, Vec2 peer) {
  return std::hypot(mean(0) - peer.x, mean(1) - peer.y);
}

// Jacobian of the range model: unit vector from peer to estimate, zeros on
// velocity. Returns false when the estimate sits on the peer.
inline bool range_jacobian(const StateVector& mean, Vec2 peer, Eigen::Matrix<double, 1, 4>& h) {
  const double dx = mean(0) - peer.x;
  const double dy = mean(1) - peer.y;
  const double rho = std::hypot(dx, dy);
  if (rho < 1e-9) return false;
  h << dx / rho, dy / rho, 0.0, 0.0;
  return true;
}

enum class RangeUpdateOutcome { applied, gated, degenerate };

struct RangeUpdate {
  EkfState state;
  RangeUpdateOutcome outcome = RangeUpdateOutcome::applied;
};

inline RangeUpdate update_range(const EkfState& state, Vec2 peer_position, double measured_range,
                                const NoiseConfig& noise = {}) {
  if (!(measured_range > 0.0)) throw DomainError("measured range must be positive");
  RangeUpdate out{state, RangeUpdateOutcome::applied};
  Eigen::Matrix<double, 1, 4> h;
  if (!range_jacobian(state.mean, peer_position, h)) {
    ++out.state.degenerate_updates;
    out.outcome = RangeUpdateOutcome::degenerate;
    return out;
  }
  const double r = noise.range_meas_sigma * noise.range_meas_sigma;
  const double innovation = measured_range - predicted_range(state.mean, peer_position);
  const double s = (h * state.covariance * h.transpose())(0, 0) + r;
  if (std::abs(innovation) > noise.gate_sigmas * std::sqrt(s)) {
    ++out.state.gated_updates;
    out.outcome = RangeUpdateOutcome::gated;
    return out;
  }
  detail::joseph_update<1>(out.state, h, Eigen::Matrix<double, 1, 1>(innovation), Eigen::Matrix<double, 1, 1>(r));
  return out;
}

}  // namespace nanoswarm
