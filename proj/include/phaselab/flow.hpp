#pragma once

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "phaselab/energy.hpp"

namespace phaselab {

/// Semi-implicit gradient-flow step for the phase-field energy, convexly
/// stabilized: with kappa >= sup W'' over the range the iterates visit,
///   (M + dt eps S + dt kappa/eps M) u+ = M (u + dt/eps (kappa u - W'(u)))
/// never increases the energy, for any dt > 0. The factorization is cached
/// and only rebuilt when the iterate range forces a larger kappa.
class FlowStepper {
 public:
  FlowStepper(const OperatorPair& ops, const DoubleWell& well, double epsilon,
              double dt)
      : ops_(&ops), well_(well), epsilon_(epsilon), dt_(dt) {
    require(epsilon > 0.0, "epsilon must be positive");
    require(dt > 0.0, "dt must be positive");
    band_lo_ = well.alpha() - 0.5;
    band_hi_ = well.beta() + 0.5;
    refactor();
  }

  double kappa() const { return kappa_; }

  VertexField step(const VertexField& u) const {
    require(u.size() == ops_->mass_diag.size(), "field size mismatch");
    cover(u.minCoeff(), u.maxCoeff());
    for (int guard = 0; guard < 60; ++guard) {
      VertexField rhs(u.size());
      for (int i = 0; i < u.size(); ++i) {
        rhs[i] = ops_->mass_diag[i] *
                 (u[i] + dt_ / epsilon_ * (kappa_ * u[i] - well_.dw(u[i])));
      }
      VertexField next = solver_.solve(rhs);
      if (solver_.info() != Eigen::Success || !next.allFinite()) {
        throw NumericalError("stabilized flow solve failed; system is singular");
      }
      // The decrease guarantee needs kappa to dominate W'' on the segment
      // between u and u+; if u+ escaped the covered band, enlarge and redo.
      if (next.minCoeff() >= band_lo_ && next.maxCoeff() <= band_hi_) {
        return next;
      }
      cover(next.minCoeff(), next.maxCoeff());
    }
    throw NumericalError("stabilized flow could not bound the iterate range");
  }

 private:
  void cover(double lo, double hi) const {
    if (lo >= band_lo_ && hi <= band_hi_) return;
    band_lo_ = std::min(band_lo_, lo - 0.5);
    band_hi_ = std::max(band_hi_, hi + 0.5);
    refactor();
  }

  void refactor() const {
    kappa_ = std::max(well_.max_ddw(band_lo_, band_hi_), 0.0);
    SparseMatrix system = dt_ * epsilon_ * ops_->stiffness;
    double diag_scale = 1.0 + dt_ * kappa_ / epsilon_;
    for (int i = 0; i < ops_->mass_diag.size(); ++i) {
      system.coeffRef(i, i) += diag_scale * ops_->mass_diag[i];
    }
    solver_.compute(system);
    if (solver_.info() != Eigen::Success) {
      throw NumericalError("flow system factorization failed");
    }
  }

  const OperatorPair* ops_;
  DoubleWell well_;
  double epsilon_;
  double dt_;
  mutable double band_lo_ = 0.0, band_hi_ = 0.0;
  mutable double kappa_ = 0.0;
  mutable Eigen::SimplicialLDLT<SparseMatrix> solver_;
};

/// Damped Newton refinement of a near-steady state, sharing the stability
/// Hessian A = eps S + M diag(W''(u))/eps. Indefinite or singular Hessians
/// (saddles, zero modes) are handled by an adaptive Tikhonov shift tau M.
struct PolishReport {
  VertexField u;
  std::vector<double> residual_trace;
  bool converged = false;
  int iterations = 0;
};

inline PolishReport newton_polish(const OperatorPair& ops,
                                  const DoubleWell& well, double epsilon,
                                  const VertexField& u0, double tol = 1e-10,
                                  int max_iterations = 60) {
  PolishReport report;
  report.u = u0;
  const int nv = static_cast<int>(u0.size());

  auto residual_inf = [&](const VertexField& u) {
    return el_residual(ops, well, epsilon, u).cwiseAbs().maxCoeff();
  };

  double tau = 0.0;
  double res = residual_inf(report.u);
  report.residual_trace.push_back(res);
  for (int it = 0; it < max_iterations && res > tol; ++it) {
    SparseMatrix hess = epsilon * ops.stiffness;
    for (int i = 0; i < nv; ++i) {
      hess.coeffRef(i, i) +=
          ops.mass_diag[i] * (well.ddw(report.u[i]) / epsilon + tau);
    }
    VertexField grad(nv);
    {
      VertexField r = el_residual(ops, well, epsilon, report.u);
      grad = ops.mass_diag.cwiseProduct(r);
    }

    Eigen::SparseLU<SparseMatrix> lu(hess);
    bool solved = lu.info() == Eigen::Success;
    VertexField delta;
    if (solved) {
      delta = lu.solve(-grad);
      solved = delta.allFinite();
    }

    bool accepted = false;
    if (solved) {
      double s = 1.0;
      for (int bt = 0; bt < 12; ++bt, s *= 0.5) {
        VertexField trial = report.u + s * delta;
        double trial_res = residual_inf(trial);
        if (trial_res < res * (1.0 - 0.25 * s) || trial_res < tol) {
          report.u = trial;
          res = trial_res;
          accepted = true;
          break;
        }
      }
    }
    if (accepted) {
      tau *= 0.25;
      if (tau < 1e-14) tau = 0.0;
    } else {
      tau = (tau == 0.0) ? 1e-8 * std::max(1.0, 1.0 / epsilon) : tau * 100.0;
      if (tau > 1e12) break;
    }
    report.residual_trace.push_back(res);
    report.iterations = it + 1;
  }
  report.converged = res <= tol;
  return report;
}

/// Outcome of a steady-state search by stabilized flow plus optional polish.
struct SolveReport {
  VertexField u;
  int steps = 0;
  std::string termination;  // converged | max-steps | diverged
  std::vector<double> energy_trace;
  std::vector<double> residual_trace;
};

struct SolveParams {
  double dt = 0.5;
  int max_steps = 20000;
  double tolerance = 1e-8;        // flow target, sup-norm of the EL residual
  bool polish = true;
  double polish_tolerance = 1e-10;
  std::uint64_t seed = 1;         // for the stall-escape perturbation
  int check_every = 10;           // residual evaluation cadence
};

/// Run the stabilized flow from u0 until the EL residual drops below
/// params.tolerance, then (optionally) Newton-polish. Saddle stalls are
/// escaped by a tiny seeded perturbation after a long residual plateau;
/// at most three injections, all recorded in the traces.
inline SolveReport solve_steady(const OperatorPair& ops, const DoubleWell& well,
                                double epsilon, const VertexField& u0,
                                const SolveParams& params = {}) {
  FlowStepper stepper(ops, well, epsilon, params.dt);
  SolveReport report;
  report.u = u0;
  report.termination = "max-steps";

  Rng rng(params.seed);
  double best_res = std::numeric_limits<double>::infinity();
  int last_improvement = 0;
  int injections = 0;

  report.energy_trace.push_back(phase_energy(ops, well, epsilon, report.u));
  for (int k = 1; k <= params.max_steps; ++k) {
    report.u = stepper.step(report.u);
    report.steps = k;
    double e = phase_energy(ops, well, epsilon, report.u);
    report.energy_trace.push_back(e);
    if (!std::isfinite(e) || report.u.cwiseAbs().maxCoeff() > 1e6) {
      report.termination = "diverged";
      return report;
    }

    if (k % params.check_every == 0 || k == params.max_steps) {
      double res = el_residual(ops, well, epsilon, report.u).cwiseAbs().maxCoeff();
      report.residual_trace.push_back(res);
      if (res < 0.999 * best_res) {
        best_res = res;
        last_improvement = k;
      }
      if (res <= params.tolerance) {
        report.termination = "converged";
        break;
      }
      // Plateau with a residual still far from zero: likely hovering near a
      // saddle; nudge off its stable manifold.
      if (k - last_improvement > 600 && injections < 3) {
        double amp = 1e-6 * (well.beta() - well.alpha());
        for (int i = 0; i < report.u.size(); ++i) {
          report.u[i] += amp * rng.uniform(-1.0, 1.0);
        }
        ++injections;
        last_improvement = k;
        report.energy_trace.push_back(phase_energy(ops, well, epsilon, report.u));
      }
    }
  }

  if (report.termination == "converged" && params.polish) {
    PolishReport polish = newton_polish(ops, well, epsilon, report.u,
                                        params.polish_tolerance);
    report.u = polish.u;
    for (double r : polish.residual_trace) report.residual_trace.push_back(r);
    report.energy_trace.push_back(phase_energy(ops, well, epsilon, report.u));
    report.steps += polish.iterations;
  }
  return report;
}

}  // namespace phaselab
