// One-step maps for the semi-discrete IEQ system.
//
// GaussStepper: s-stage Gauss collocation in Runge-Kutta form. Quadratic
// invariants, in particular E = <U, Q>_h, are conserved up to the accuracy of
// the stage solve.
//
// LcnsStepper: two-step linearly implicit Crank-Nicolson scheme with
// coefficients frozen at the extrapolation (3 U^n - U^{n-1}) / 2. Each step
// is a linear problem for U^{n+1/2}, solved by the plain fixed-point
// iteration V <- (tau/2) D[(g1 + g2) V] + b.
#ifndef CHIEQ_STEPPER_HPP
#define CHIEQ_STEPPER_HPP

#include <chieq/gauss.hpp>
#include <chieq/grid.hpp>
#include <chieq/model.hpp>
#include <chieq/spectral.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace chieq {

enum class StageSolver { FixedPoint, Newton };

template <typename Scalar>
struct StepperConfig {
  Scalar tau{0};
  /// Gauss stage residual tau * max_i |K_i - f(Y_i)|, in state units.
  Scalar stage_tol{1e-13};
  int max_iters{200};
  /// Relaxation factor for the fixed-point stage iteration, in (0, 1].
  Scalar damping{1};
  StageSolver solver{StageSolver::FixedPoint};
  /// Stopping rule for the LCNS linear iteration: max-norm of successive iterates.
  Scalar lcns_tol{1e-14};

  void validate() const {
    if (!(tau > Scalar(0)) || !std::isfinite(static_cast<double>(tau))) throw ConfigError("tau", "must be positive");
    if (!(stage_tol > Scalar(0))) throw ConfigError("stage_tol", "must be positive");
    if (!(lcns_tol > Scalar(0))) throw ConfigError("lcns_tol", "must be positive");
    if (max_iters < 1) throw ConfigError("max_iters", "must be >= 1");
    if (!(damping > Scalar(0) && damping <= Scalar(1))) throw ConfigError("damping", "must lie in (0, 1]");
  }
};

/// Failure of a single step. `step()` is -1 until the driver attaches an index.
class StepError : public std::runtime_error {
 public:
  StepError(const std::string& what, int iterations, double residual, std::int64_t step = -1)
      : std::runtime_error(what), what_(what), iterations_(iterations), residual_(residual), step_(step) {}

  int iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }
  std::int64_t step() const noexcept { return step_; }
  const std::string& reason() const noexcept { return what_; }

  StepError at_step(std::int64_t step) const {
    std::ostringstream os;
    os << "step " << step << ": " << what_;
    StepError e(os.str(), iterations_, residual_, step);
    e.what_ = what_;
    return e;
  }

 private:
  std::string what_;
  int iterations_;
  double residual_;
  std::int64_t step_;
};

struct SolveStats {
  int iterations{0};
  double residual{0};
};

namespace detail {

// Restarted GMRES for a matrix-free operator on flat vectors. Stops on a
// relative residual of `rtol` or after `max_restarts` cycles.
template <typename Scalar, typename Apply>
void gmres(Apply&& apply, const Field<Scalar>& rhs, Field<Scalar>& x, Scalar rtol, int restart, int max_restarts) {
  using Vec = Field<Scalar>;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Eigen::Index n = rhs.size();
  const Scalar rhs_norm = rhs.norm();
  if (rhs_norm == Scalar(0)) {
    x.setZero(n);
    return;
  }
  if (x.size() != n) x.setZero(n);
  Vec w(n);
  for (int cycle = 0; cycle < max_restarts; ++cycle) {
    apply(x, w);
    Vec r = rhs - w;
    Scalar beta = r.norm();
    if (beta <= rtol * rhs_norm) return;
    Mat V(n, restart + 1);
    Mat H = Mat::Zero(restart + 1, restart);
    Vec cs = Vec::Zero(restart), sn = Vec::Zero(restart), g = Vec::Zero(restart + 1);
    V.col(0) = r / beta;
    g[0] = beta;
    int k = 0;
    for (; k < restart; ++k) {
      apply(V.col(k), w);
      for (int i = 0; i <= k; ++i) {
        H(i, k) = V.col(i).dot(w);
        w -= H(i, k) * V.col(i);
      }
      H(k + 1, k) = w.norm();
      const bool breakdown = H(k + 1, k) == Scalar(0);
      if (!breakdown) V.col(k + 1) = w / H(k + 1, k);
      for (int i = 0; i < k; ++i) {
        const Scalar t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -sn[i] * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      const Scalar denom = std::hypot(H(k, k), H(k + 1, k));
      cs[k] = H(k, k) / denom;
      sn[k] = H(k + 1, k) / denom;
      H(k, k) = denom;
      H(k + 1, k) = Scalar(0);
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      if (std::abs(g[k + 1]) <= rtol * rhs_norm || breakdown) {
        ++k;
        break;
      }
    }
    const Vec y = H.topLeftCorner(k, k).template triangularView<Eigen::Upper>().solve(g.head(k));
    x += V.leftCols(k) * y;
    if (std::abs(g[k]) <= rtol * rhs_norm) return;
  }
}

}  // namespace detail

template <typename Scalar>
class GaussStepper {
 public:
  using RealVector = Field<Scalar>;
  using ComplexVector = ComplexField<Scalar>;

  GaussStepper(const SpectralOps<Scalar>& ops, GaussTableau<Scalar> tableau, StepperConfig<Scalar> cfg)
      : ops_(&ops), tab_(std::move(tableau)), cfg_(cfg), rhs_(ops) {
    cfg_.validate();
    const int s = tab_.s;
    const Eigen::Index n = ops.size();
    K_.assign(s, State<Scalar>::zero(n));
    Knew_.assign(s, State<Scalar>::zero(n));
    stage_ = State<Scalar>::zero(n);
  }

  const GaussTableau<Scalar>& tableau() const { return tab_; }
  const StepperConfig<Scalar>& config() const { return cfg_; }
  const SolveStats& last_stats() const { return stats_; }

  State<Scalar> step(const State<Scalar>& s0) { return step(s0, cfg_.tau); }

  /// Advances by `tau`, which may be negative.
  State<Scalar> step(const State<Scalar>& s0, Scalar tau) {
    detail::check_length(s0.u.size(), ops_->size(), "GaussStepper::step(u)");
    detail::check_length(s0.q.size(), ops_->size(), "GaussStepper::step(q)");
    rhs_(s0, K_[0]);
    if (!K_[0].all_finite()) throw StepError("non-finite right-hand side at step start", 0, NAN);
    for (int i = 1; i < tab_.s; ++i) K_[i] = K_[0];

    if (cfg_.solver == StageSolver::Newton)
      solve_newton(s0, tau);
    else
      solve_fixed_point(s0, tau);

    State<Scalar> out = s0;
    for (int i = 0; i < tab_.s; ++i) {
      out.u += tau * tab_.b[i] * K_[i].u;
      out.q += tau * tab_.b[i] * K_[i].q;
    }
    if (!out.all_finite()) throw StepError("non-finite state after step", stats_.iterations, stats_.residual);
    return out;
  }

 private:
  void stage_state(const State<Scalar>& s0, Scalar tau, int i, const std::vector<State<Scalar>>& K) {
    stage_.u = s0.u;
    stage_.q = s0.q;
    for (int j = 0; j < tab_.s; ++j) {
      const Scalar w = tau * tab_.A(i, j);
      stage_.u += w * K[j].u;
      stage_.q += w * K[j].q;
    }
  }

  // Evaluates f at all stage states built from K_ into Knew_, returns tau * max |Knew - K|.
  Scalar evaluate_stages(const State<Scalar>& s0, Scalar tau) {
    Scalar res = 0;
    for (int i = 0; i < tab_.s; ++i) {
      stage_state(s0, tau, i, K_);
      rhs_(stage_, Knew_[i]);
      if (!Knew_[i].all_finite()) throw StepError("non-finite stage slope", stats_.iterations, NAN);
      res = std::max({res, linf_norm(Knew_[i].u - K_[i].u), linf_norm(Knew_[i].q - K_[i].q)});
    }
    return std::abs(tau) * res;
  }

  void solve_fixed_point(const State<Scalar>& s0, Scalar tau) {
    const Scalar omega = cfg_.damping;
    Scalar first = 0;
    for (int it = 1; it <= cfg_.max_iters; ++it) {
      const Scalar res = evaluate_stages(s0, tau);
      stats_ = {it, static_cast<double>(res)};
      if (!std::isfinite(static_cast<double>(res)))
        throw StepError("non-finite stage residual", it, static_cast<double>(res));
      if (it == 1) first = res;
      if (res > Scalar(1e6) * first)
        throw StepError("Gauss stage fixed-point iteration diverged (try a smaller tau or --solver newton)", it,
                        static_cast<double>(res));
      for (int i = 0; i < tab_.s; ++i) {
        if (omega == Scalar(1)) {
          std::swap(K_[i], Knew_[i]);
        } else {
          K_[i].u += omega * (Knew_[i].u - K_[i].u);
          K_[i].q += omega * (Knew_[i].q - K_[i].q);
        }
      }
      if (res <= cfg_.stage_tol) return;
    }
    std::ostringstream os;
    os << "Gauss stage iteration did not converge in " << cfg_.max_iters << " iterations (residual " << stats_.residual
       << ")";
    throw StepError(os.str(), stats_.iterations, stats_.residual);
  }

  // Linearization of f at stage state Y_i applied to (du, dq) -> (ju, jq).
  // Uses U, D1 U, f(Y_i).u and D1 f(Y_i).u captured by freeze_stages().
  void freeze_stages(const State<Scalar>& s0, Scalar tau) {
    for (int i = 0; i < tab_.s; ++i) {
      stage_state(s0, tau, i, K_);
      jac_[i].u = stage_.u;
      jac_[i].ux = apply_d1(*ops_, stage_.u);
      jac_[i].f = Knew_[i].u;
      jac_[i].fx = apply_d1(*ops_, Knew_[i].u);
    }
  }

  template <typename DU, typename DQ>
  void apply_jacobian(int i, const DU& du, const DQ& dq, RealVector& ju, RealVector& jq) {
    const SpectralOps<Scalar>& ops = *ops_;
    const Frozen& J = jac_[i];
    tmp_ = du;
    ops.forward(tmp_, spec_);
    spec_ = spec_.cwiseProduct(ops.half_sym1());
    ops.inverse(spec_, tmp_);  // D1 du
    const RealVector flux = tmp_.cwiseProduct(J.u) + J.ux.cwiseProduct(du);
    ops.forward(flux, spec2_);
    const RealVector local = dq - Scalar(2) * J.u.cwiseProduct(du);
    ops.forward(local, spec_);
    spec_ = ops.half_symD().cwiseProduct(spec_ + ops.half_sym1().cwiseProduct(spec2_));
    ops.inverse(spec_, ju);
    spec_ = spec_.cwiseProduct(ops.half_sym1());
    ops.inverse(spec_, flux_x_);  // D1 ju
    jq = -(du.cwiseProduct(J.f) + J.u.cwiseProduct(ju) + tmp_.cwiseProduct(J.fx) + J.ux.cwiseProduct(flux_x_));
  }

  // Newton on the stage equations: (I - tau A J(Y)) dK = F(K) - K with the
  // block row i using the Jacobian at Y_i. Linear solves by GMRES.
  void solve_newton(const State<Scalar>& s0, Scalar tau) {
    const int s = tab_.s;
    jac_.resize(s);
    const Eigen::Index n = ops_->size();
    const Eigen::Index block = 2 * n;
    RealVector rhs(s * block), delta;
    std::vector<RealVector> ju(s, RealVector(n)), jq(s, RealVector(n));
    auto apply = [&](const auto& x, RealVector& y) {
      y.resize(s * block);
      for (int j = 0; j < s; ++j)
        apply_jacobian(j, x.segment(j * block, n), x.segment(j * block + n, n), ju[j], jq[j]);
      for (int i = 0; i < s; ++i) {
        y.segment(i * block, n) = x.segment(i * block, n);
        y.segment(i * block + n, n) = x.segment(i * block + n, n);
        for (int j = 0; j < s; ++j) {
          y.segment(i * block, n) -= tau * tab_.A(i, j) * ju[j];
          y.segment(i * block + n, n) -= tau * tab_.A(i, j) * jq[j];
        }
      }
    };
    for (int it = 1; it <= cfg_.max_iters; ++it) {
      const Scalar res = evaluate_stages(s0, tau);
      stats_ = {it, static_cast<double>(res)};
      if (!std::isfinite(static_cast<double>(res)))
        throw StepError("non-finite stage residual", it, static_cast<double>(res));
      if (res <= cfg_.stage_tol) {
        for (int i = 0; i < s; ++i) std::swap(K_[i], Knew_[i]);
        return;
      }
      freeze_stages(s0, tau);
      for (int i = 0; i < s; ++i) {
        rhs.segment(i * block, n) = Knew_[i].u - K_[i].u;
        rhs.segment(i * block + n, n) = Knew_[i].q - K_[i].q;
      }
      delta.setZero(s * block);
      detail::gmres<Scalar>(apply, rhs, delta, Scalar(1e-4), 40, 20);
      for (int i = 0; i < s; ++i) {
        K_[i].u += delta.segment(i * block, n);
        K_[i].q += delta.segment(i * block + n, n);
      }
    }
    std::ostringstream os;
    os << "Gauss Newton iteration did not converge in " << cfg_.max_iters << " iterations (residual "
       << stats_.residual << ")";
    throw StepError(os.str(), stats_.iterations, stats_.residual);
  }

  const SpectralOps<Scalar>* ops_;
  GaussTableau<Scalar> tab_;
  StepperConfig<Scalar> cfg_;
  IeqRhs<Scalar> rhs_;
  std::vector<State<Scalar>> K_, Knew_;
  State<Scalar> stage_;
  SolveStats stats_;
  // Newton scratch
  struct Frozen {
    RealVector u, ux, f, fx;
  };
  std::vector<Frozen> jac_;
  RealVector tmp_, flux_x_;
  ComplexVector spec_, spec2_;
};

template <typename Scalar>
class LcnsStepper {
 public:
  using RealVector = Field<Scalar>;
  using ComplexVector = ComplexField<Scalar>;

  LcnsStepper(const SpectralOps<Scalar>& ops, StepperConfig<Scalar> cfg) : ops_(&ops), cfg_(cfg) { cfg_.validate(); }

  const StepperConfig<Scalar>& config() const { return cfg_; }
  const SolveStats& last_stats() const { return stats_; }

  /// First step: coefficients frozen at U^0.
  State<Scalar> bootstrap(const State<Scalar>& s0) { return advance(s0.u, s0); }

  /// Two-step update from (U^{n-1}, U^n, Q^n).
  State<Scalar> step(const State<Scalar>& prev, const State<Scalar>& curr) {
    detail::check_length(prev.u.size(), ops_->size(), "LcnsStepper::step(prev)");
    return advance(Scalar(1.5) * curr.u - Scalar(0.5) * prev.u, curr);
  }

 private:
  // y = D[(g1 + g2) v] where g1 v = a v - D1(b v), g2 v = a v + b D1 v.
  void apply_iteration_operator(const RealVector& v, RealVector& out) {
    const SpectralOps<Scalar>& ops = *ops_;
    ops.forward(v, spec_);
    spec_ = spec_.cwiseProduct(ops.half_sym1());
    ops.inverse(spec_, vx_);
    work_ = Scalar(2) * a_.cwiseProduct(v) + b_.cwiseProduct(vx_);
    ops.forward(work_, spec_);
    work_ = b_.cwiseProduct(v);
    ops.forward(work_, spec2_);
    spec_ = ops.half_symD().cwiseProduct(spec_ - ops.half_sym1().cwiseProduct(spec2_));
    ops.inverse(spec_, out);
  }

  // g2 v = a v + b D1 v
  RealVector apply_g2(const RealVector& v) const {
    return a_.cwiseProduct(v) + b_.cwiseProduct(apply_d1(*ops_, v));
  }

  State<Scalar> advance(const RealVector& frozen, const State<Scalar>& curr) {
    detail::check_length(curr.u.size(), ops_->size(), "LcnsStepper(u)");
    detail::check_length(curr.q.size(), ops_->size(), "LcnsStepper(q)");
    detail::check_length(frozen.size(), ops_->size(), "LcnsStepper(extrapolant)");
    const Scalar half_tau = cfg_.tau / Scalar(2);
    a_ = -frozen;
    b_ = -apply_d1(*ops_, frozen);

    const RealVector g2_un = apply_g2(curr.u);
    const RealVector rhs = curr.u + half_tau * apply_D(*ops_, RealVector(curr.q - g2_un));

    RealVector v = curr.u, next(curr.u.size());
    const Scalar scale = std::max({linf_norm(v), linf_norm(rhs), std::numeric_limits<Scalar>::min()});
    bool converged = false;
    for (int it = 1; it <= cfg_.max_iters; ++it) {
      apply_iteration_operator(v, next);
      next = half_tau * next + rhs;
      const Scalar diff = linf_norm(next - v);
      stats_ = {it, static_cast<double>(diff)};
      v.swap(next);
      if (!std::isfinite(static_cast<double>(diff)))
        throw StepError("non-finite LCNS iterate", it, static_cast<double>(diff));
      if (linf_norm(v) > Scalar(1e6) * scale)
        throw StepError("LCNS iteration diverged (iterate norm grew by more than 1e6)", it, static_cast<double>(diff));
      if (diff < cfg_.lcns_tol) {
        converged = true;
        break;
      }
    }
    if (!converged) {
      std::ostringstream os;
      os << "LCNS iteration did not converge in " << cfg_.max_iters << " iterations (last difference "
         << stats_.residual << ")";
      throw StepError(os.str(), stats_.iterations, stats_.residual);
    }

    const RealVector q_half = apply_g2(v) + curr.q - g2_un;
    State<Scalar> out{Scalar(2) * v - curr.u, Scalar(2) * q_half - curr.q};
    if (!out.all_finite()) throw StepError("non-finite state after LCNS step", stats_.iterations, stats_.residual);
    return out;
  }

  const SpectralOps<Scalar>* ops_;
  StepperConfig<Scalar> cfg_;
  SolveStats stats_;
  RealVector a_, b_, vx_, work_;
  ComplexVector spec_, spec2_;
};

template <typename Scalar>
State<Scalar> gauss_step(const SpectralOps<Scalar>& ops, const GaussTableau<Scalar>& tab,
                         const StepperConfig<Scalar>& cfg, const State<Scalar>& s0) {
  GaussStepper<Scalar> stepper(ops, tab, cfg);
  return stepper.step(s0);
}

template <typename Scalar>
State<Scalar> lcns_bootstrap(const SpectralOps<Scalar>& ops, const StepperConfig<Scalar>& cfg,
                             const State<Scalar>& s0) {
  LcnsStepper<Scalar> stepper(ops, cfg);
  return stepper.bootstrap(s0);
}

template <typename Scalar>
State<Scalar> lcns_step(const SpectralOps<Scalar>& ops, const StepperConfig<Scalar>& cfg,
                        const State<Scalar>& prev, const State<Scalar>& curr) {
  LcnsStepper<Scalar> stepper(ops, cfg);
  return stepper.step(prev, curr);
}

using StepperConfigd = StepperConfig<double>;

}  // namespace chieq

#endif  // CHIEQ_STEPPER_HPP
