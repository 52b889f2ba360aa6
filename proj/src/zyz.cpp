#include "soma/zyz.hpp"

#include "soma/random.hpp"

namespace soma::zyz {

namespace {

double beta_of(const Pose& p) { return zyz_from_rot(p.rotation).angles.beta; }

}  // namespace

bool ik_feasible(const Pose& pose, const KinematicModel& model) {
  if (!pose.position.allFinite() || !is_rotation(pose.rotation)) return false;
  if (!model.in_box(pose.position)) return false;
  if (pose.position.norm() > model.reach_mm) return false;
  const double off = std::abs(to_deg(beta_of(pose)) - 90.0);
  return off >= model.singular_margin_deg;
}

FeasibilityOracle geometric_oracle(const KinematicModel& model) {
  return {"geometric", [model](const Pose& p) { return ik_feasible(p, model); }};
}

FeasibilityOracle constant_oracle(bool verdict) {
  return {verdict ? "always-true" : "always-false", [verdict](const Pose&) { return verdict; }};
}

FeasibilityOracle clamp_sensitive_oracle() {
  // Slack keeps a pose rebuilt from beta = 89.9° on the accepted side.
  constexpr double kSlack = 1e-9;
  return scripted_oracle("clamp-sensitive", [](const Pose& p) {
    return std::abs(beta_of(p) - deg(90.0)) < deg(0.1) - kSlack;
  });
}

FeasibilityOracle scripted_oracle(std::string name, std::function<bool(const Pose&)> reject) {
  return {std::move(name), [reject = std::move(reject)](const Pose& p) { return !reject(p); }};
}

FeasibilityOracle oracle_by_name(const std::string& name, const KinematicModel& model) {
  if (name == "geometric") return geometric_oracle(model);
  if (name == "always-true") return constant_oracle(true);
  if (name == "always-false") return constant_oracle(false);
  if (name == "clamp-sensitive") return clamp_sensitive_oracle();
  throw std::invalid_argument("unknown oracle: " + name);
}

const char* step_name(StepKind k) {
  switch (k) {
    case StepKind::ClampBeta: return "clamp_beta";
    case StepKind::WristClearance: return "wrist_clearance";
    case StepKind::RetractUp: return "retract_up";
    case StepKind::CorrectiveRotation: return "corrective_rotation";
    case StepKind::AlignIntermediate: return "align_intermediate";
    case StepKind::LinearCartesianFallback: return "linear_cartesian_fallback";
  }
  return "?";
}

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::DirectSuccess: return "direct_success";
    case Outcome::GuardedSuccess: return "guarded_success";
    case Outcome::RegraspSuccess: return "regrasp_success";
    case Outcome::Infeasible: return "infeasible";
  }
  return "?";
}

bool succeeded(Outcome o) { return o != Outcome::Infeasible; }

namespace {

// The recovery sequence works on `candidate`; the last step falls back to a
// Cartesian move onto `requested`, the pose the caller originally asked for,
// so the guard never loses a pose the oracle would accept directly.
RegraspPlan run_regrasp(const Pose& candidate, const Pose& requested, double beta_threshold,
                        const KinematicModel& model, const FeasibilityOracle& oracle) {
  RegraspPlan plan;
  const auto ext = zyz_from_rot(candidate.rotation);
  const auto [alpha, beta, gamma] = ext.angles;

  const bool near_singular = proximity_index(beta) > kProximityTrigger;
  if (!near_singular && std::abs(beta) <= beta_threshold && oracle(candidate)) {
    plan.outcome = Outcome::DirectSuccess;
    plan.final_pose = candidate;
    return plan;
  }

  Pose current = candidate;
  auto finish = [&](RegraspStep step) {
    plan.steps.push_back(step);
    if (step.accepted) {
      plan.outcome = Outcome::RegraspSuccess;
      plan.final_pose = step.pose;
    }
    return step.accepted;
  };

  // 1. Proximity relaxation.
  current.rotation = rot_from_zyz(ZyzAngles<double>{alpha, clamp_beta(beta), gamma});
  if (finish({StepKind::ClampBeta, current, Gripper::Unchanged, 0.0, oracle(current)}))
    return plan;

  // 2. Wrist clearance: J5 by +90°, else -90°, when its safe range allows it.
  {
    RegraspStep step{StepKind::WristClearance, current, Gripper::Unchanged, 1.0, false};
    if (model.joints[4].safe_upper() >= 90.0) {
      for (double sign : {1.0, -1.0}) {
        Pose trial = current;
        trial.rotation = current.rotation * rot_y(sign * deg(90.0));
        if (oracle(trial)) {
          step = {StepKind::WristClearance, trial, Gripper::Unchanged, sign, true};
          current = trial;
          break;
        }
      }
    }
    if (finish(step)) return plan;
  }

  // 3. Retract vertically and open the gripper. The retract pose does not
  // place the piece, so it never ends the sequence.
  {
    Pose up = current;
    up.position.z() += kRetractMm;
    plan.steps.push_back({StepKind::RetractUp, up, Gripper::Open, 0.0, false});
  }

  // 4. Corrective rotation [0, 0, 90°] and close.
  current.rotation = current.rotation * rot_z(deg(90.0));
  if (finish({StepKind::CorrectiveRotation, current, Gripper::Close, 0.0, oracle(current)}))
    return plan;

  // 5. Intermediate alignment [alpha, 180°, gamma].
  current.rotation = rot_from_zyz(ZyzAngles<double>{alpha, deg(180.0), gamma});
  if (finish({StepKind::AlignIntermediate, current, Gripper::Unchanged, 0.0, oracle(current)}))
    return plan;

  // 6. Linear Cartesian interpolation onto the requested pose; only the end
  // pose is checked, the interpolation itself runs without IK.
  if (finish({StepKind::LinearCartesianFallback, requested, Gripper::Unchanged, 0.0,
              oracle(requested)}))
    return plan;

  plan.outcome = Outcome::Infeasible;
  plan.final_pose = current;
  return plan;
}

}  // namespace

RegraspPlan safe_regrasp(const Pose& target, double beta_threshold, const KinematicModel& model,
                         const FeasibilityOracle& oracle) {
  return run_regrasp(target, target, beta_threshold, model, oracle);
}

RegraspPlan singularity_guard(const Pose& target, const Pose& current, const KinematicModel& model,
                              const FeasibilityOracle& oracle, const GuardOptions& options) {
  const auto ext = zyz_from_rot(target.rotation);
  const auto [alpha, beta, gamma] = ext.angles;
  const double right = deg(90.0);

  Pose guarded = target;
  const bool in_band =
      std::abs(beta - right) < options.band || std::abs(beta + right) < options.band;
  if (in_band)
    guarded.rotation = rot_from_zyz(ZyzAngles<double>{alpha, clamp_beta(beta), gamma});

  Pose intermediate = current;
  intermediate.rotation = options.roll_frame == RollFrame::Tool
                              ? Rot3<double>(current.rotation * rot_z(right))
                              : Rot3<double>(rot_z(right) * current.rotation);

  if (oracle(intermediate) && oracle(guarded)) {
    RegraspPlan plan;
    plan.final_pose = guarded;
    plan.intermediate = intermediate;
    if (in_band) {
      plan.outcome = Outcome::GuardedSuccess;
      plan.steps.push_back({StepKind::ClampBeta, guarded, Gripper::Unchanged, 0.0, true});
    } else {
      plan.outcome = Outcome::DirectSuccess;
    }
    return plan;
  }
  return run_regrasp(guarded, target, options.beta_threshold, model, oracle);
}

BenchmarkResult guard_benchmark(const std::vector<Pose>& targets, const Pose& current,
                                const KinematicModel& model, const FeasibilityOracle& oracle,
                                const GuardOptions& options) {
  if (targets.empty()) throw std::invalid_argument("guard_benchmark: empty target list");
  BenchmarkResult out;
  std::size_t with = 0, without = 0, steps = 0;
  for (const Pose& t : targets) {
    TargetTrace trace;
    trace.direct_ok = oracle(t);
    trace.plan = singularity_guard(t, current, model, oracle, options);
    without += trace.direct_ok;
    with += succeeded(trace.plan.outcome);
    steps += trace.plan.steps.size();
    out.traces.push_back(std::move(trace));
  }
  const double n = static_cast<double>(targets.size());
  out.success_with_guard = static_cast<double>(with) / n;
  out.success_without = static_cast<double>(without) / n;
  out.mean_steps_with_guard = static_cast<double>(steps) / n;
  return out;
}

std::vector<Pose> near_singular_suite(int count, std::uint64_t seed, const KinematicModel& model) {
  Rng rng(seed, "near-singular-suite");
  std::vector<Pose> out;
  while (static_cast<int>(out.size()) < count) {
    Pose p;
    p.position = {rng.uniform(200.0, 500.0), rng.uniform(-300.0, 300.0), rng.uniform(50.0, 600.0)};
    if (!model.in_box(p.position) || p.position.norm() > model.reach_mm) continue;
    const double off = rng.uniform(-0.099, 0.099);
    const ZyzAngles<double> a{rng.uniform(-170.0, 170.0), 90.0 + off, rng.uniform(-170.0, 170.0)};
    p.rotation = rot_from_zyz(ZyzAngles<double>{deg(a.alpha), deg(a.beta), deg(a.gamma)});
    out.push_back(p);
  }
  return out;
}

Pose home_pose() {
  Pose p;
  p.position = {400.0, 0.0, 400.0};
  return p;
}

}  // namespace soma::zyz
