// Fixed-step time integration driver shared by every scheme.
#ifndef CHIEQ_INTEGRATE_HPP
#define CHIEQ_INTEGRATE_HPP

#include <chieq/gauss.hpp>
#include <chieq/model.hpp>
#include <chieq/stepper.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace chieq {

/// A time scheme: Gauss collocation with `stages` stages (order 2 * stages)
/// or the two-step LCNS scheme. Named "lcns" or "gauss<order>".
struct Scheme {
  enum class Kind { Gauss, Lcns };
  Kind kind{Kind::Lcns};
  int stages{0};

  static Scheme gauss(int stages) { return {Kind::Gauss, stages}; }
  static Scheme lcns() { return {Kind::Lcns, 0}; }

  int order() const { return kind == Kind::Lcns ? 2 : 2 * stages; }

  std::string name() const { return kind == Kind::Lcns ? "lcns" : "gauss" + std::to_string(2 * stages); }

  static Scheme parse(const std::string& text) {
    if (text == "lcns") return lcns();
    if (text.rfind("gauss", 0) == 0 && text.size() > 5) {
      const std::string digits = text.substr(5);
      if (digits.find_first_not_of("0123456789") == std::string::npos) {
        const int order = std::stoi(digits);
        if (order >= 2 && order % 2 == 0) return gauss(order / 2);
      }
    }
    throw ConfigError("scheme", "unknown scheme '" + text + "' (expected lcns or gauss<even order>, e.g. gauss4)");
  }

  friend bool operator==(const Scheme&, const Scheme&) = default;
};

/// Number of steps M with M * tau = T. Non-integer ratios are rejected.
template <typename Scalar>
std::int64_t step_count(Scalar T, Scalar tau) {
  if (!(tau > Scalar(0))) throw ConfigError("tau", "must be positive");
  if (!(T >= Scalar(0))) throw ConfigError("T", "must be non-negative");
  const double ratio = static_cast<double>(T) / static_cast<double>(tau);
  const double m = std::round(ratio);
  if (std::abs(ratio - m) > 1e-9 * std::max(1.0, ratio))
    throw ConfigError("T", "T / tau = " + std::to_string(ratio) + " is not an integer step count");
  return static_cast<std::int64_t>(m);
}

template <typename Scalar>
struct IntegrateOptions {
  /// Invariants (and the sampler) are taken every `cadence` steps, plus the final step.
  std::int64_t cadence{1};
  bool record_invariants{true};
  std::function<void(std::int64_t step, Scalar t, const State<Scalar>&)> sampler;
};

template <typename Scalar>
struct Trajectory {
  State<Scalar> final_state;
  std::vector<InvariantRecord<Scalar>> records;
  std::int64_t steps{0};
  std::int64_t solver_iterations{0};
};

/// Advances `s0` by T / tau steps of `scheme`. StepErrors carry the failing step index.
template <typename Scalar>
Trajectory<Scalar> integrate(const Scheme& scheme, const SpectralOps<Scalar>& ops, const StepperConfig<Scalar>& cfg,
                             const State<Scalar>& s0, Scalar T, const IntegrateOptions<Scalar>& options = {}) {
  cfg.validate();
  if (options.cadence < 1) throw ConfigError("cadence", "must be >= 1");
  const std::int64_t steps = step_count(T, cfg.tau);
  Trajectory<Scalar> traj;
  traj.final_state = s0;
  if (steps == 0) return traj;

  auto sample = [&](std::int64_t n, const State<Scalar>& s) {
    const Scalar t = Scalar(n) * cfg.tau;
    if (options.record_invariants) traj.records.push_back(measure_invariants(ops, t, s));
    if (options.sampler) options.sampler(n, t, s);
  };
  sample(0, s0);

  std::optional<GaussStepper<Scalar>> gauss;
  std::optional<LcnsStepper<Scalar>> lcns;
  if (scheme.kind == Scheme::Kind::Gauss)
    gauss.emplace(ops, gauss_tableau<Scalar>(scheme.stages), cfg);
  else
    lcns.emplace(ops, cfg);

  State<Scalar> prev, curr = s0;
  for (std::int64_t n = 1; n <= steps; ++n) {
    State<Scalar> next;
    try {
      if (gauss) {
        next = gauss->step(curr);
        traj.solver_iterations += gauss->last_stats().iterations;
      } else {
        next = (n == 1) ? lcns->bootstrap(curr) : lcns->step(prev, curr);
        traj.solver_iterations += lcns->last_stats().iterations;
      }
    } catch (const StepError& e) {
      throw e.at_step(n);
    }
    prev = std::move(curr);
    curr = std::move(next);
    if (n % options.cadence == 0 || n == steps) sample(n, curr);
  }
  traj.steps = steps;
  traj.final_state = std::move(curr);
  return traj;
}

}  // namespace chieq

#endif  // CHIEQ_INTEGRATE_HPP
