#pragma once

#include "phaselab/double_well.hpp"
#include "phaselab/operators.hpp"

namespace phaselab {

/// Phase-field energy E_eps(u) = eps/2 * integral |grad u|^2
///                             + 1/eps * integral W(u),
/// with the gradient term from the stiffness form and the potential term
/// mass-lumped. Throws NumericalError naming a vertex on non-finite data.
inline double phase_energy(const OperatorPair& ops, const DoubleWell& well,
                           double epsilon, const VertexField& u) {
  require(epsilon > 0.0, "epsilon must be positive");
  require(u.size() == ops.mass_diag.size(), "field size mismatch");
  for (int i = 0; i < u.size(); ++i) {
    if (!std::isfinite(u[i])) {
      throw NumericalError("field is non-finite at vertex " + std::to_string(i));
    }
  }
  double dirichlet = u.dot(ops.stiffness * u);
  double potential = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    potential += ops.mass_diag[i] * well.w(u[i]);
  }
  double e = 0.5 * epsilon * dirichlet + potential / epsilon;
  if (!std::isfinite(e)) {
    throw NumericalError("energy overflowed; field magnitude too large");
  }
  return e;
}

/// Euler-Lagrange residual in the mass metric:
///   r = -eps * Delta u + W'(u)/eps = eps M^-1 S u + W'(u)/eps.
/// The energy gradient is recovered as dE/du_i = M_ii r_i, which the
/// finite-difference tests pin down. Zero exactly at steady states.
inline VertexField el_residual(const OperatorPair& ops, const DoubleWell& well,
                               double epsilon, const VertexField& u) {
  require(epsilon > 0.0, "epsilon must be positive");
  require(u.size() == ops.mass_diag.size(), "field size mismatch");
  VertexField r = epsilon * (ops.stiffness * u).cwiseQuotient(ops.mass_diag);
  for (int i = 0; i < u.size(); ++i) {
    r[i] += well.dw(u[i]) / epsilon;
  }
  return r;
}

}  // namespace phaselab
