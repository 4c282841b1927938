#pragma once

#include <Eigen/SparseLU>

#include "phaselab/double_well.hpp"
#include "phaselab/generators.hpp"

namespace phaselab {

/// Periodic steady state of the reduced equation on a circle of length L:
///   eps^2 u'' = W'(u),  u(x + L) = u(x)
/// discretized on the n-point lattice x_i = i L / n. With the quartic well
/// the nontrivial solution is a kink/antikink pair. Because the square-torus
/// stiffness gives the diagonal edges zero weight, a column-wise extension of
/// this lattice solution is a steady state of the surface discretization to
/// the same tolerance.
struct PeriodicState {
  double side = 0.0;
  Eigen::VectorXd u;  // n values at x_i = i L / n
  double residual_inf = 0.0;
};

/// Kink/antikink initial profile with interfaces at L/4 and 3L/4.
inline Eigen::VectorXd periodic_pair_init(double side, int n,
                                          const DoubleWell& well,
                                          double epsilon) {
  require(n >= 8, "lattice must have at least 8 points");
  double mid = 0.5 * (well.alpha() + well.beta());
  double half = 0.5 * (well.beta() - well.alpha());
  double w = std::sqrt(2.0) * epsilon;
  Eigen::VectorXd u(n);
  for (int i = 0; i < n; ++i) {
    double x = side * i / n;
    u[i] = mid + half * std::tanh((x - 0.25 * side) / w) *
                     std::tanh((0.75 * side - x) / w);
  }
  return u;
}

inline PeriodicState solve_periodic_steady(double side, const DoubleWell& well,
                                           double epsilon,
                                           const Eigen::VectorXd& u0,
                                           double tolerance = 1e-10,
                                           int max_iterations = 100) {
  require(side > 0.0 && epsilon > 0.0, "side and epsilon must be positive");
  const int n = static_cast<int>(u0.size());
  require(n >= 8, "lattice must have at least 8 points");
  const double h = side / n;
  require(epsilon >= 4.0 * h,
          "epsilon under-resolved: need epsilon >= 4 h = " +
              std::to_string(4.0 * h));

  const double e2 = epsilon * epsilon;
  auto residual = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd f(n);
    for (int i = 0; i < n; ++i) {
      double lap =
          (v[(i + 1) % n] - 2.0 * v[i] + v[(i + n - 1) % n]) / (h * h);
      f[i] = e2 * lap - well.dw(v[i]);
    }
    return f;
  };

  Eigen::VectorXd u = u0;
  Eigen::VectorXd f = residual(u);
  double res = f.cwiseAbs().maxCoeff();
  std::vector<double> trace{res};

  for (int it = 0; it < max_iterations && res > tolerance; ++it) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(3 * n);
    for (int i = 0; i < n; ++i) {
      trips.emplace_back(i, (i + n - 1) % n, e2 / (h * h));
      trips.emplace_back(i, i, -2.0 * e2 / (h * h) - well.ddw(u[i]));
      trips.emplace_back(i, (i + 1) % n, e2 / (h * h));
    }
    SparseMatrix jac(n, n);
    jac.setFromTriplets(trips.begin(), trips.end());
    Eigen::SparseLU<SparseMatrix> lu(jac);
    if (lu.info() != Eigen::Success) {
      throw NonconvergenceError("periodic Newton: singular Jacobian", trace);
    }
    Eigen::VectorXd delta = lu.solve(-f);

    double s = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt, s *= 0.5) {
      Eigen::VectorXd trial = u + s * delta;
      Eigen::VectorXd ft = residual(trial);
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
      std::snprintf(msg, sizeof msg, "periodic Newton stalled at residual %.3e",
                    res);
      throw NonconvergenceError(msg, trace);
    }
  }
  if (res > tolerance) {
    char msg[128];
    std::snprintf(msg, sizeof msg,
                  "periodic Newton: residual %.3e above tolerance after %d "
                  "iterations",
                  res, max_iterations);
    throw NonconvergenceError(msg, trace);
  }
  return {side, u, res};
}

/// Column-wise extension of a lattice state onto the matching square torus.
inline VertexField extend_periodic(const PeriodicState& state,
                                   const TorusMesh& torus) {
  const int n = torus.n;
  require(state.u.size() == n, "lattice size does not match the torus");
  require(std::abs(state.side - torus.side) <= 1e-12 * state.side,
          "lattice length does not match the torus");
  const double h = state.side / n;
  VertexField u(torus.mesh.num_vertices);
  for (Eigen::Index v = 0; v < u.size(); ++v) {
    int i = static_cast<int>(std::lround(torus.vertex_uv(v, 0) / h)) % n;
    u[v] = state.u[i];
  }
  return u;
}

}  // namespace phaselab
