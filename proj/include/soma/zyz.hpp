#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace soma::zyz {

template <typename Scalar>
using Rot3 = Eigen::Matrix<Scalar, 3, 3>;

template <typename Scalar>
constexpr Scalar deg(Scalar degrees) {
  return degrees * std::numbers::pi_v<Scalar> / Scalar(180);
}

template <typename Scalar>
constexpr Scalar to_deg(Scalar radians) {
  return radians * Scalar(180) / std::numbers::pi_v<Scalar>;
}

/// R = Rz(alpha) Ry(beta) Rz(gamma). alpha, gamma in (-pi, pi], beta in [0, pi]
/// when produced by zyz_from_rot.
template <typename Scalar>
struct ZyzAngles {
  Scalar alpha = 0;
  Scalar beta = 0;
  Scalar gamma = 0;
};

template <typename Scalar>
struct Extraction {
  ZyzAngles<Scalar> angles;
  bool singular = false;  // |sin beta| below kDegenerateSin; gamma fixed to 0
};

struct NotARotation : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

inline constexpr double kDegenerateSin = 1e-7;
inline constexpr double kRotationTolerance = 1e-9;

template <typename Scalar>
Rot3<Scalar> rot_z(Scalar angle) {
  const Scalar c = std::cos(angle), s = std::sin(angle);
  Rot3<Scalar> r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

template <typename Scalar>
Rot3<Scalar> rot_y(Scalar angle) {
  const Scalar c = std::cos(angle), s = std::sin(angle);
  Rot3<Scalar> r;
  r << c, 0, s, 0, 1, 0, -s, 0, c;
  return r;
}

/// Closed-form product Rz(a) Ry(b) Rz(g), written out entry by entry.
template <typename Scalar>
Rot3<Scalar> rot_from_zyz(const ZyzAngles<Scalar>& a) {
  const Scalar ca = std::cos(a.alpha), sa = std::sin(a.alpha);
  const Scalar cb = std::cos(a.beta), sb = std::sin(a.beta);
  const Scalar cg = std::cos(a.gamma), sg = std::sin(a.gamma);
  Rot3<Scalar> r;
  r << ca * cb * cg - sa * sg, -ca * cb * sg - sa * cg, ca * sb,
       sa * cb * cg + ca * sg, -sa * cb * sg + ca * cg, sa * sb,
       -sb * cg,               sb * sg,                 cb;
  return r;
}

template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& r,
                 typename Derived::Scalar tol = typename Derived::Scalar(kRotationTolerance)) {
  using Scalar = typename Derived::Scalar;
  if (!r.allFinite()) return false;
  const Scalar ortho = (r.transpose() * r - Rot3<Scalar>::Identity()).norm();
  return ortho <= tol && std::abs(r.determinant() - Scalar(1)) <= tol;
}

namespace detail {
template <typename Scalar>
Scalar wrap_pi(Scalar a) {
  // atan2 may return -pi for a negative-zero argument; the range is (-pi, pi].
  return a <= -std::numbers::pi_v<Scalar> ? std::numbers::pi_v<Scalar> : a;
}
}  // namespace detail

template <typename Derived>
Extraction<typename Derived::Scalar> zyz_from_rot(const Eigen::MatrixBase<Derived>& r) {
  using Scalar = typename Derived::Scalar;
  if (!is_rotation(r)) throw NotARotation("zyz_from_rot: matrix is not a proper rotation");

  Extraction<Scalar> out;
  const Scalar r22 = std::clamp(r(2, 2), Scalar(-1), Scalar(1));
  Scalar beta = std::acos(r22);
  if (std::abs(std::sin(beta)) < Scalar(kDegenerateSin)) {
    out.singular = true;
    out.angles.gamma = 0;
    if (r22 > 0) {
      beta = 0;
      out.angles.alpha = detail::wrap_pi(std::atan2(r(1, 0), r(0, 0)));
    } else {
      beta = std::numbers::pi_v<Scalar>;
      out.angles.alpha = detail::wrap_pi(std::atan2(-r(1, 0), -r(0, 0)));
    }
  } else {
    out.angles.alpha = detail::wrap_pi(std::atan2(r(1, 2), r(0, 2)));
    out.angles.gamma = detail::wrap_pi(std::atan2(r(2, 1), -r(2, 0)));
  }
  out.angles.beta = beta;
  return out;
}

/// 1 - |cos beta|: 0 far from the beta = ±90° configuration, 1 on it.
template <typename Scalar>
Scalar proximity_index(Scalar beta) {
  return Scalar(1) - std::abs(std::cos(beta));
}

template <typename Scalar>
Scalar clamp_beta(Scalar beta) {
  const Scalar bound = deg(Scalar(89.9));
  return std::clamp(beta, -bound, bound);
}

// ---------------------------------------------------------------------------
// Motion-safety planning. Positions are millimetres in the robot base frame.

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Rot3<double> rotation = Rot3<double>::Identity();
};

struct JointLimits {
  double lower_deg;
  double upper_deg;
  double margin_deg;
  double safe_upper() const { return upper_deg - margin_deg; }
};

struct KinematicModel {
  double reach_mm = 900.0;
  Eigen::Vector3d box_min{-500.0, -500.0, 0.0};
  Eigen::Vector3d box_max{500.0, 500.0, 800.0};
  // J1..J6; 5° margin on J2, J3, J5 and 10° on the continuous joints.
  std::array<JointLimits, 6> joints{{{-360, 360, 10},
                                     {-95, 95, 5},
                                     {-135, 135, 5},
                                     {-360, 360, 10},
                                     {-135, 135, 5},
                                     {-360, 360, 10}}};
  /// Poses whose beta lies within this many degrees of 90° are rejected by
  /// the geometric oracle.
  double singular_margin_deg = 5.0;

  bool in_box(const Eigen::Vector3d& p) const {
    return (p.array() >= box_min.array()).all() && (p.array() <= box_max.array()).all();
  }
};

/// Pluggable stand-in for inverse-kinematics reachability. Must be pure.
struct FeasibilityOracle {
  std::string name;
  std::function<bool(const Pose&)> accepts;

  bool operator()(const Pose& p) const { return accepts(p); }
};

/// Geometric surrogate: workspace box, reach sphere and a band around beta = 90°.
bool ik_feasible(const Pose& pose, const KinematicModel& model);

FeasibilityOracle geometric_oracle(const KinematicModel& model);
FeasibilityOracle constant_oracle(bool verdict);
/// Rejects exactly the poses with |beta - 90°| < 0.1° and accepts the rest, so
/// a pose clamped to 89.9° passes.
FeasibilityOracle clamp_sensitive_oracle();
/// Rejects every pose for which `reject` returns true.
FeasibilityOracle scripted_oracle(std::string name, std::function<bool(const Pose&)> reject);
/// Oracle by name: geometric, always-true, always-false, clamp-sensitive.
FeasibilityOracle oracle_by_name(const std::string& name, const KinematicModel& model);

enum class StepKind {
  ClampBeta,
  WristClearance,
  RetractUp,
  CorrectiveRotation,
  AlignIntermediate,
  LinearCartesianFallback,
};

enum class Gripper { Unchanged, Open, Close };

enum class Outcome { DirectSuccess, GuardedSuccess, RegraspSuccess, Infeasible };

const char* step_name(StepKind k);
const char* outcome_name(Outcome o);
bool succeeded(Outcome o);

struct RegraspStep {
  StepKind kind;
  Pose pose;
  Gripper gripper = Gripper::Unchanged;
  double wrist_sign = 0.0;  // ±1 for WristClearance
  bool accepted = false;    // oracle verdict on the pose reached by this step
};

struct RegraspPlan {
  Outcome outcome = Outcome::DirectSuccess;
  std::vector<RegraspStep> steps;
  Pose final_pose;
  std::optional<Pose> intermediate;  // wrist-roll waypoint of the guarded two-step motion
};

enum class RollFrame { Tool, Base };

struct GuardOptions {
  /// Half-width of the band around beta = 90° that triggers clamping. Default
  /// matches the PI > 0.9 region, |cos beta| < 0.1.
  double band = std::asin(0.1);
  /// |beta| above this also triggers a regrasp; pi disables it so PI governs.
  double beta_threshold = std::numbers::pi;
  RollFrame roll_frame = RollFrame::Tool;
};

inline constexpr double kProximityTrigger = 0.9;
inline constexpr double kRetractMm = 50.0;

RegraspPlan safe_regrasp(const Pose& target, double beta_threshold, const KinematicModel& model,
                         const FeasibilityOracle& oracle);

RegraspPlan singularity_guard(const Pose& target, const Pose& current, const KinematicModel& model,
                              const FeasibilityOracle& oracle, const GuardOptions& options = {});

struct TargetTrace {
  bool direct_ok = false;
  RegraspPlan plan;
};

struct BenchmarkResult {
  double success_with_guard = 0.0;
  double success_without = 0.0;
  double mean_steps_with_guard = 0.0;
  std::vector<TargetTrace> traces;
};

BenchmarkResult guard_benchmark(const std::vector<Pose>& targets, const Pose& current,
                                const KinematicModel& model, const FeasibilityOracle& oracle,
                                const GuardOptions& options = {});

/// Deterministic suite of poses with beta strictly inside (89.9°, 90.1°),
/// random alpha/gamma and positions inside the workspace box.
std::vector<Pose> near_singular_suite(int count, std::uint64_t seed, const KinematicModel& model);

Pose home_pose();

}  // namespace soma::zyz
