#pragma once

#include <Eigen/SparseLU>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "phaselab/double_well.hpp"
#include "phaselab/eigensolver.hpp"
#include "phaselab/profile.hpp"

namespace phaselab {

/// Axisymmetric steady state on a revolution surface, reduced to the
/// meridian: eps^2 (u'' + (psi'/psi) u') = W'(u) on [0, t_max] with
/// Neumann closure at the poles. The pole rows use the regularized
/// Laplacian 2 u''(0) with a ghost-point stencil 4 (u_1 - u_0) / h^2.
struct AxisymmetricState {
  ProfileCurve profile;
  double epsilon = 0.0;
  Eigen::VectorXd t;  // n+1 uniform nodes including both poles
  Eigen::VectorXd u;
  double residual_inf = 0.0;  // sup norm of eps^2 Delta u - W'(u)
};

/// tanh step through the well midpoint, centered at the domain midpoint.
inline Eigen::VectorXd axisym_step_init(const ProfileCurve& profile, int n,
                                        const DoubleWell& well, double epsilon) {
  require(n >= 8, "grid must have at least 8 intervals");
  double mid = 0.5 * (well.alpha() + well.beta());
  double half = 0.5 * (well.beta() - well.alpha());
  double center = 0.5 * profile.t_max();
  Eigen::VectorXd u(n + 1);
  for (int i = 0; i <= n; ++i) {
    double t = profile.t_max() * i / n;
    u[i] = mid + half * std::tanh((t - center) / (std::sqrt(2.0) * epsilon));
  }
  return u;
}

namespace detail {

inline Eigen::VectorXd axisym_residual(const ProfileCurve& profile,
                                       const DoubleWell& well, double epsilon,
                                       const Eigen::VectorXd& u) {
  const int n = static_cast<int>(u.size()) - 1;
  const double h = profile.t_max() / n;
  const double e2 = epsilon * epsilon;
  Eigen::VectorXd f(n + 1);
  f[0] = e2 * 4.0 * (u[1] - u[0]) / (h * h) - well.dw(u[0]);
  for (int i = 1; i < n; ++i) {
    double t = profile.t_max() * i / n;
    double lap = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h) +
                 profile.dpsi(t) / profile.psi(t) * (u[i + 1] - u[i - 1]) /
                     (2.0 * h);
    f[i] = e2 * lap - well.dw(u[i]);
  }
  f[n] = e2 * 4.0 * (u[n - 1] - u[n]) / (h * h) - well.dw(u[n]);
  return f;
}

}  // namespace detail

/// Damped Newton solve of the reduced steady equation from the given initial
/// profile (n+1 nodal values). Requires epsilon >= 4 h so the transition
/// layer is resolved. Throws NonconvergenceError with the residual trace.
inline AxisymmetricState solve_axisymmetric_steady(
    const ProfileCurve& profile, const DoubleWell& well, double epsilon,
    const Eigen::VectorXd& u0, double tolerance = 1e-10,
    int max_iterations = 100) {
  require(epsilon > 0.0, "epsilon must be positive");
  const int n = static_cast<int>(u0.size()) - 1;
  require(n >= 8, "grid must have at least 8 intervals");
  const double h = profile.t_max() / n;
  require(epsilon >= 4.0 * h,
          "epsilon under-resolved: need epsilon >= 4 h = " +
              std::to_string(4.0 * h));

  const double e2 = epsilon * epsilon;
  Eigen::VectorXd u = u0;
  Eigen::VectorXd f = detail::axisym_residual(profile, well, epsilon, u);
  double res = f.cwiseAbs().maxCoeff();
  std::vector<double> trace{res};

  for (int it = 0; it < max_iterations && res > tolerance; ++it) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(3 * (n + 1));
    trips.emplace_back(0, 0, -4.0 * e2 / (h * h) - well.ddw(u[0]));
    trips.emplace_back(0, 1, 4.0 * e2 / (h * h));
    for (int i = 1; i < n; ++i) {
      double t = profile.t_max() * i / n;
      double adv = profile.dpsi(t) / profile.psi(t) / (2.0 * h);
      trips.emplace_back(i, i - 1, e2 * (1.0 / (h * h) - adv));
      trips.emplace_back(i, i, -2.0 * e2 / (h * h) - well.ddw(u[i]));
      trips.emplace_back(i, i + 1, e2 * (1.0 / (h * h) + adv));
    }
    trips.emplace_back(n, n - 1, 4.0 * e2 / (h * h));
    trips.emplace_back(n, n, -4.0 * e2 / (h * h) - well.ddw(u[n]));

    SparseMatrix jac(n + 1, n + 1);
    jac.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<SparseMatrix> lu(jac);
    if (lu.info() != Eigen::Success) {
      throw NonconvergenceError("axisymmetric Newton: singular Jacobian", trace);
    }
    Eigen::VectorXd delta = lu.solve(-f);

    double s = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt, s *= 0.5) {
      Eigen::VectorXd trial = u + s * delta;
      Eigen::VectorXd ft = detail::axisym_residual(profile, well, epsilon, trial);
      double rt = ft.cwiseAbs().maxCoeff();
      if (rt < res * (1.0 - 0.25 * s) || rt < tolerance) {
        u = trial;
        f = ft;
        res = rt;
        accepted = true;
        break;
      }
    }
    trace.push_back(res);
    if (!accepted) {
      char msg[96];
      std::snprintf(msg, sizeof msg,
                    "axisymmetric Newton stalled at residual %.3e", res);
      throw NonconvergenceError(msg, trace);
    }
  }
  if (res > tolerance) {
    char msg[128];
    std::snprintf(msg, sizeof msg,
                  "axisymmetric Newton: residual %.3e above tolerance after %d "
                  "iterations",
                  res, max_iterations);
    throw NonconvergenceError(msg, trace);
  }

  AxisymmetricState state{profile, epsilon, Eigen::VectorXd(n + 1), u, res};
  for (int i = 0; i <= n; ++i) state.t[i] = profile.t_max() * i / n;
  return state;
}

/// Meridian locations where u crosses the well midpoint (linear interp).
inline std::vector<double> axisym_interface_crossings(
    const AxisymmetricState& state, const DoubleWell& well) {
  double mid = 0.5 * (well.alpha() + well.beta());
  std::vector<double> out;
  for (int i = 1; i < state.u.size(); ++i) {
    double a = state.u[i - 1] - mid, b = state.u[i] - mid;
    if (a == 0.0) continue;  // counted via the adjacent interval
    if ((a < 0.0) != (b < 0.0) || b == 0.0) {
      double s = a / (a - b);
      out.push_back(state.t[i - 1] + s * (state.t[i] - state.t[i - 1]));
    }
  }
  return out;
}

/// Sample a reduced state at arbitrary meridian parameters (linear interp).
inline VertexField extend_axisymmetric(const AxisymmetricState& state,
                                       const Eigen::VectorXd& vertex_t) {
  const int n = static_cast<int>(state.u.size()) - 1;
  const double t_max = state.profile.t_max();
  const double h = t_max / n;
  VertexField out(vertex_t.size());
  for (int v = 0; v < vertex_t.size(); ++v) {
    double t = vertex_t[v];
    require(t >= -1e-12 && t <= t_max + 1e-12, "parameter outside the domain");
    double x = std::clamp(t, 0.0, t_max) / h;
    int j = std::min(static_cast<int>(x), n - 1);
    double s = x - j;
    out[v] = (1.0 - s) * state.u[j] + s * state.u[j + 1];
  }
  return out;
}

namespace detail {

/// Fourth-order finite differences on a uniform grid, one-sided at the ends.
inline Eigen::VectorXd derivative4(const Eigen::VectorXd& y, double h) {
  const int n = static_cast<int>(y.size());
  require(n >= 6, "grid too small for the 4th-order stencil");
  Eigen::VectorXd d(n);
  auto forward = [&](int i, int dir) {
    return dir *
           (-25.0 / 12.0 * y[i] + 4.0 * y[i + dir] - 3.0 * y[i + 2 * dir] +
            4.0 / 3.0 * y[i + 3 * dir] - 0.25 * y[i + 4 * dir]) /
           h;
  };
  d[0] = forward(0, 1);
  d[1] = forward(1, 1);
  d[n - 1] = forward(n - 1, -1);
  d[n - 2] = forward(n - 2, -1);
  for (int i = 2; i < n - 2; ++i) {
    d[i] = (y[i - 2] - 8.0 * y[i - 1] + 8.0 * y[i + 1] - y[i + 2]) / (12.0 * h);
  }
  return d;
}

/// Two defect-correction passes against a fourth-order residual. The solver's
/// central scheme leaves an O(h^2) bias in the nodal values; evaluating the
/// residual with the wide stencils and solving once with the second-order
/// Jacobian removes it, leaving O(h^4) values on the same grid.
inline Eigen::VectorXd refine_fourth_order(const AxisymmetricState& state,
                                           const DoubleWell& well) {
  const int n = static_cast<int>(state.u.size()) - 1;
  const double h = state.profile.t_max() / n;
  const double e2 = state.epsilon * state.epsilon;
  Eigen::VectorXd u = state.u;
  for (int pass = 0; pass < 2; ++pass) {
    Eigen::VectorXd du = derivative4(u, h);
    Eigen::VectorXd d2u = derivative4(du, h);
    Eigen::VectorXd residual(n + 1);
    for (int i = 0; i <= n; ++i) {
      if (i == 0 || i == n) {
        residual[i] = e2 * 2.0 * d2u[i] - well.dw(u[i]);
      } else {
        double adv = state.profile.dpsi(state.t[i]) / state.profile.psi(state.t[i]);
        residual[i] = e2 * (d2u[i] + adv * du[i]) - well.dw(u[i]);
      }
    }
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i <= n; ++i) {
      if (i == 0 || i == n) {
        int other = i == 0 ? 1 : n - 1;
        trips.emplace_back(i, i, -4.0 * e2 / (h * h) - well.ddw(u[i]));
        trips.emplace_back(i, other, 4.0 * e2 / (h * h));
      } else {
        double adv = state.profile.dpsi(state.t[i]) / state.profile.psi(state.t[i]);
        trips.emplace_back(i, i - 1, e2 / (h * h) - e2 * adv / (2.0 * h));
        trips.emplace_back(i, i, -2.0 * e2 / (h * h) - well.ddw(u[i]));
        trips.emplace_back(i, i + 1, e2 / (h * h) + e2 * adv / (2.0 * h));
      }
    }
    SparseMatrix jac(n + 1, n + 1);
    jac.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<SparseMatrix> lu(jac);
    if (lu.info() != Eigen::Success) {
      throw NumericalError("defect-correction Jacobian factorization failed");
    }
    Eigen::VectorXd delta = lu.solve(-residual);
    if (!delta.allFinite()) {
      throw NumericalError("defect-correction step produced non-finite values");
    }
    u += delta;
  }
  return u;
}

}  // namespace detail

/// Both sides of the Jacobi-field identity for the second variation at a
/// reduced steady state, evaluated on v = |u'|:
///   lhs = (L v, v) = -2 pi * int { v'^2 + W''(u) v^2 / eps^2 } psi dt
///   rhs =  2 pi * int u'^2 { (psi'/psi)^2 + K } psi dt
/// The pole integrand of rhs extends continuously by 0 (u' vanishes linearly
/// while (psi'/psi)^2 grows only quadratically). Both sides vanish on
/// constant states, which are flagged degenerate instead of divided.
///
/// The state is refined to fourth order before evaluation; without that the
/// gap saturates at the solver's O(h^2) nodal bias instead of shrinking with
/// the stencil order.
struct IdentityReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double relative_gap = 0.0;
  bool degenerate = false;
};

inline IdentityReport check_second_variation_identity(
    const AxisymmetricState& state, const DoubleWell& well) {
  const int n = static_cast<int>(state.u.size()) - 1;
  const double h = state.profile.t_max() / n;
  const double eps = state.epsilon;

  IdentityReport report;
  double span = state.u.maxCoeff() - state.u.minCoeff();
  if (span <= 1e-10 * std::max(1.0, state.u.cwiseAbs().maxCoeff())) {
    report.degenerate = true;
    return report;
  }

  Eigen::VectorXd refined = detail::refine_fourth_order(state, well);
  Eigen::VectorXd du = detail::derivative4(refined, h);
  Eigen::VectorXd v = du.cwiseAbs();
  Eigen::VectorXd dv = detail::derivative4(v, h);

  Eigen::VectorXd lhs_density(n + 1), rhs_density(n + 1);
  for (int i = 0; i <= n; ++i) {
    double t = state.t[i];
    double psi = state.profile.psi(t);
    lhs_density[i] =
        (dv[i] * dv[i] + well.ddw(refined[i]) * v[i] * v[i] / (eps * eps)) * psi;
    if (i == 0 || i == n) {
      rhs_density[i] = 0.0;
    } else {
      double ratio = state.profile.dpsi(t) / psi;
      double curvature = state.profile.gauss_curvature(t);
      rhs_density[i] = du[i] * du[i] * (ratio * ratio + curvature) * psi;
    }
  }
  auto trapezoid = [&](const Eigen::VectorXd& y) {
    double s = 0.5 * (y[0] + y[n]);
    for (int i = 1; i < n; ++i) s += y[i];
    return s * h;
  };
  report.lhs = -2.0 * M_PI * trapezoid(lhs_density);
  report.rhs = 2.0 * M_PI * trapezoid(rhs_density);
  report.relative_gap = std::abs(report.lhs - report.rhs) /
                        std::max({std::abs(report.lhs), std::abs(report.rhs), 1e-300});
  return report;
}

/// Azimuthal mode decomposition of the second variation at a reduced state.
/// For each m the pencil acts on meridian profiles v with the form
///   eps int { v'^2 + m^2 v^2/psi^2 } psi dt + 1/eps int W''(u) v^2 psi dt
/// against the weighted mass int v^2 psi dt. Modes m >= 1 carry a Dirichlet
/// pole condition; m = 0 keeps the poles with their half-cell mass.
struct ModeBand {
  int m = 0;
  Eigen::VectorXd eigenvalues;
  Eigen::VectorXd residuals;
};

struct ModeSpectrum {
  std::vector<ModeBand> bands;
  double min_eigenvalue = 0.0;
  int argmin_m = 0;
  double tau = 0.0;
  std::string classification;  // stable | unstable | degenerate
};

inline ModeSpectrum axisym_mode_spectrum(const AxisymmetricState& state,
                                         const DoubleWell& well, int m_max,
                                         int k = 3,
                                         const EigenOptions& opts = {}) {
  require(m_max >= 0, "m_max must be non-negative");
  const int n = static_cast<int>(state.u.size()) - 1;
  const double h = state.profile.t_max() / n;
  const double eps = state.epsilon;

  Eigen::VectorXd psi_node(n + 1), psi_mid(n);
  for (int i = 0; i <= n; ++i) psi_node[i] = state.profile.psi(state.t[i]);
  for (int i = 0; i < n; ++i) psi_mid[i] = state.profile.psi((i + 0.5) * h);

  namespace bq = boost::math::quadrature;
  auto psi_fn = [&](double t) { return state.profile.psi(t); };
  double pole_mass_lo =
      bq::gauss_kronrod<double, 15>::integrate(psi_fn, 0.0, 0.5 * h, 5, 1e-13);
  double pole_mass_hi = bq::gauss_kronrod<double, 15>::integrate(
      psi_fn, state.profile.t_max() - 0.5 * h, state.profile.t_max(), 5, 1e-13);

  ModeSpectrum spectrum;
  spectrum.min_eigenvalue = std::numeric_limits<double>::infinity();
  {
    VertexField u_field = state.u;
    double lo = u_field.minCoeff(), hi = u_field.maxCoeff();
    spectrum.tau = 1e-6 * std::max(well.max_ddw(lo, hi), 1.0) / eps;
  }

  for (int m = 0; m <= m_max; ++m) {
    const bool keep_poles = (m == 0);
    const int offset = keep_poles ? 0 : 1;
    const int dim = keep_poles ? n + 1 : n - 1;

    Eigen::VectorXd mass(dim);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(3 * dim);

    for (int row = 0; row < dim; ++row) {
      int i = row + offset;
      double b = (i == 0) ? pole_mass_lo
                          : (i == n) ? pole_mass_hi : h * psi_node[i];
      mass[row] = b;
      double diag = well.ddw(state.u[i]) * b / eps;
      if (m > 0) {
        diag += eps * m * m * h / psi_node[i];
      }
      trips.emplace_back(row, row, diag);
    }
    for (int i = 0; i < n; ++i) {  // edge (i, i+1)
      int r0 = i - offset, r1 = i + 1 - offset;
      double w = eps * psi_mid[i] / h;
      if (r0 >= 0 && r0 < dim) trips.emplace_back(r0, r0, w);
      if (r1 >= 0 && r1 < dim) trips.emplace_back(r1, r1, w);
      if (r0 >= 0 && r1 < dim && r0 < dim && r1 >= 0) {
        trips.emplace_back(r0, r1, -w);
        trips.emplace_back(r1, r0, -w);
      }
    }

    SparseMatrix a(dim, dim);
    a.setFromTriplets(trips.begin(), trips.end());
    int k_eff = std::min(k, dim - 1);
    EigenResult eig = smallest_eigenpairs(a, mass, k_eff, opts);

    ModeBand band{m, eig.values, eig.residuals};
    spectrum.bands.push_back(band);
    if (eig.values[0] < spectrum.min_eigenvalue) {
      spectrum.min_eigenvalue = eig.values[0];
      spectrum.argmin_m = m;
    }
  }

  if (spectrum.min_eigenvalue < -spectrum.tau) {
    spectrum.classification = "unstable";
  } else if (spectrum.min_eigenvalue <= spectrum.tau) {
    spectrum.classification = "degenerate";
  } else {
    spectrum.classification = "stable";
  }
  return spectrum;
}

}  // namespace phaselab
