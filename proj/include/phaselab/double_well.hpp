#pragma once

#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>

#include "phaselab/core.hpp"

namespace phaselab {

/// Non-negative double-well potential W with exactly two zeros alpha < beta,
/// both non-degenerate (W''> 0 there). The reaction term in the
/// Euler-Lagrange equation is -W', so steady states solve
/// eps^2 Delta u = W'(u) up to scaling.
class DoubleWell {
 public:
  enum class Kind { Quartic, ScaledQuartic, AsymmetricQuartic };

  /// W(u) = (1 - u^2)^2 / 4, wells at -1 and 1.
  static DoubleWell quartic() { return DoubleWell(Kind::Quartic, 1.0); }

  /// W(u) = c (1 - u^2)^2 / 4; rescales the surface tension by sqrt(c).
  static DoubleWell scaled_quartic(double c) {
    require(c > 0.0, "well scale must be positive");
    return DoubleWell(Kind::ScaledQuartic, c);
  }

  /// W(u) = u^2 (1 - u)^2, wells at 0 and 1.
  static DoubleWell asymmetric_quartic() {
    return DoubleWell(Kind::AsymmetricQuartic, 1.0);
  }

  Kind kind() const { return kind_; }
  double scale() const { return scale_; }
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

  double w(double u) const {
    switch (kind_) {
      case Kind::Quartic:
      case Kind::ScaledQuartic: {
        double q = 1.0 - u * u;
        return 0.25 * scale_ * q * q;
      }
      case Kind::AsymmetricQuartic: {
        double q = u * (1.0 - u);
        return q * q;
      }
    }
    return 0.0;
  }

  double dw(double u) const {
    switch (kind_) {
      case Kind::Quartic:
      case Kind::ScaledQuartic:
        return scale_ * (u * u * u - u);
      case Kind::AsymmetricQuartic:
        return 2.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
    }
    return 0.0;
  }

  double ddw(double u) const {
    switch (kind_) {
      case Kind::Quartic:
      case Kind::ScaledQuartic:
        return scale_ * (3.0 * u * u - 1.0);
      case Kind::AsymmetricQuartic:
        return 2.0 * (6.0 * u * u - 6.0 * u + 1.0);
    }
    return 0.0;
  }

  /// sup of W'' over [lo, hi] by dense sampling with a safety margin; the
  /// built-in wells are quartic, so 1e-3-spaced samples resolve the sup to
  /// much better than the 0.1% pad applied here.
  double max_ddw(double lo, double hi) const {
    require(lo <= hi, "empty interval");
    int n = 4096;
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i <= n; ++i) {
      double u = lo + (hi - lo) * static_cast<double>(i) / n;
      best = std::max(best, ddw(u));
    }
    return best * (best > 0.0 ? 1.001 : 0.999);
  }

  /// Default stabilization constant: sup of W'' over the wells padded by 1/2.
  double default_kappa() const { return max_ddw(alpha_ - 0.5, beta_ + 0.5); }

 private:
  DoubleWell(Kind kind, double scale) : kind_(kind), scale_(scale) {
    if (kind == Kind::AsymmetricQuartic) {
      alpha_ = 0.0;
      beta_ = 1.0;
    } else {
      alpha_ = -1.0;
      beta_ = 1.0;
    }
  }

  Kind kind_;
  double scale_ = 1.0;
  double alpha_ = -1.0;
  double beta_ = 1.0;
};

/// Interface tension sigma = integral over [alpha, beta] of sqrt(2 W).
/// tanh_sinh quadrature handles the sqrt-type vanishing at the wells;
/// accurate to ~1e-12 absolute for the built-in wells.
inline double surface_tension(const DoubleWell& well) {
  boost::math::quadrature::tanh_sinh<double> integrator;
  auto f = [&](double u) { return std::sqrt(2.0 * well.w(u)); };
  return integrator.integrate(f, well.alpha(), well.beta(), 1e-12);
}

/// Sampled heteroclinic connection: the 1D profile solving u' = sqrt(2 W(u))
/// with u(0) at the well midpoint, approaching alpha and beta exponentially.
/// Its 1D energy integral equals the surface tension.
struct HeteroclinicProfile {
  Eigen::VectorXd t;
  Eigen::VectorXd u;
  double energy = 0.0;  // integral of u'^2/2 + W(u) over the sampled window
};

inline HeteroclinicProfile heteroclinic_profile(const DoubleWell& well,
                                                double step = 1e-3) {
  require(step > 0.0 && step < 0.1, "step must lie in (0, 0.1)");
  const double alpha = well.alpha(), beta = well.beta();
  const double span = beta - alpha;
  const double tol = 1e-12 * span;
  const double mid = 0.5 * (alpha + beta);
  const double t_cap = 40.0 * span / std::sqrt(2.0 * well.w(mid) + 1e-30);

  auto rhs = [&](double u) {
    double w = well.w(std::clamp(u, alpha, beta));
    return std::sqrt(std::max(0.0, 2.0 * w));
  };
  auto rk4 = [&](double u, double h) {
    double k1 = rhs(u);
    double k2 = rhs(u + 0.5 * h * k1);
    double k3 = rhs(u + 0.5 * h * k2);
    double k4 = rhs(u + h * k3);
    return u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  };

  std::vector<double> fwd_t{0.0}, fwd_u{mid};
  while (beta - fwd_u.back() > tol && fwd_t.back() < t_cap) {
    fwd_u.push_back(std::min(beta, rk4(fwd_u.back(), step)));
    fwd_t.push_back(fwd_t.back() + step);
  }
  std::vector<double> bwd_t, bwd_u;
  double tu = mid, tt = 0.0;
  while (tu - alpha > tol && -tt < t_cap) {
    tu = std::max(alpha, rk4(tu, -step));
    tt -= step;
    bwd_t.push_back(tt);
    bwd_u.push_back(tu);
  }

  HeteroclinicProfile out;
  int n = static_cast<int>(bwd_t.size() + fwd_t.size());
  out.t.resize(n);
  out.u.resize(n);
  for (size_t i = 0; i < bwd_t.size(); ++i) {
    out.t[i] = bwd_t[bwd_t.size() - 1 - i];
    out.u[i] = bwd_u[bwd_u.size() - 1 - i];
  }
  for (size_t i = 0; i < fwd_t.size(); ++i) {
    out.t[bwd_t.size() + i] = fwd_t[i];
    out.u[bwd_t.size() + i] = fwd_u[i];
  }

  // Along the heteroclinic u'^2/2 + W = 2W; trapezoid over the samples.
  double e = 0.0;
  for (int i = 1; i < n; ++i) {
    double f0 = 2.0 * well.w(out.u[i - 1]);
    double f1 = 2.0 * well.w(out.u[i]);
    e += 0.5 * (f0 + f1) * (out.t[i] - out.t[i - 1]);
  }
  out.energy = e;
  return out;
}

}  // namespace phaselab
