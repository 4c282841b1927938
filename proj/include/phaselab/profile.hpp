#pragma once

#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <memory>

#include "phaselab/core.hpp"

namespace phaselab {

/// One closed parallel {t = const} with vanishing meridian slope.
/// By Clairaut's relation these are exactly the closed geodesic parallels.
struct GeodesicParallel {
  double t = 0.0;
  double length = 0.0;           // 2 pi psi(t)
  double gauss_curvature = 0.0;  // K at the parallel
};

/// Warped-product profile psi on [0, t_max] describing a closed surface of
/// revolution with metric dt^2 + psi(t)^2 dtheta^2. Smooth pole closure needs
/// psi(0) = psi(t_max) = 0, psi'(0) = 1, psi'(t_max) = -1.
///
/// Built-in families:
///   sphere      psi = sin t                     on [0, pi]
///   dumbbell(d) psi = sin t (1 - d sin^2 t)     on [0, pi], d in (1/3, 2/3]
/// plus tabulated profiles on a uniform grid (clamped cubic spline).
class ProfileCurve {
 public:
  enum class Kind { Sphere, Dumbbell, Tabulated };

  static ProfileCurve sphere() {
    ProfileCurve p;
    p.kind_ = Kind::Sphere;
    p.t_max_ = M_PI;
    p.validate();
    return p;
  }

  /// Dumbbell family: two spherical bulges joined by a negatively curved
  /// neck at t = pi/2. d in (1/3, 2/3] keeps the neck a strict local minimum
  /// of psi while |psi'| <= 1 everywhere (embeddable as a revolution surface).
  static ProfileCurve dumbbell(double d) {
    require(d > 1.0 / 3.0 && d <= 2.0 / 3.0,
            "dumbbell parameter must lie in (1/3, 2/3]");
    ProfileCurve p;
    p.kind_ = Kind::Dumbbell;
    p.d_ = d;
    p.t_max_ = M_PI;
    p.validate();
    return p;
  }

  /// Uniformly sampled profile on [0, t_max]; values.front()/back() must be 0.
  /// The spline is clamped to psi'(0) = 1 and psi'(t_max) = -1.
  static ProfileCurve tabulated(const Eigen::VectorXd& values, double t_max) {
    require(values.size() >= 8, "tabulated profile needs at least 8 samples");
    require(t_max > 0.0, "t_max must be positive");
    require(values.allFinite(), "tabulated profile has non-finite samples");
    ProfileCurve p;
    p.kind_ = Kind::Tabulated;
    p.t_max_ = t_max;
    double h = t_max / static_cast<double>(values.size() - 1);
    std::vector<double> data(values.data(), values.data() + values.size());
    p.spline_ = std::make_shared<Spline>(data.begin(), data.end(), 0.0, h, 1.0,
                                         -1.0);
    p.validate();
    return p;
  }

  Kind kind() const { return kind_; }
  double t_max() const { return t_max_; }
  double dumbbell_d() const { return d_; }

  double psi(double t) const {
    switch (kind_) {
      case Kind::Sphere:
        return std::sin(t);
      case Kind::Dumbbell: {
        double s = std::sin(t);
        return s * (1.0 - d_ * s * s);
      }
      case Kind::Tabulated:
        return (*spline_)(t);
    }
    return 0.0;
  }

  double dpsi(double t) const {
    switch (kind_) {
      case Kind::Sphere:
        return std::cos(t);
      case Kind::Dumbbell: {
        double s = std::sin(t), c = std::cos(t);
        return c * (1.0 - 3.0 * d_ * s * s);
      }
      case Kind::Tabulated:
        return spline_->prime(t);
    }
    return 0.0;
  }

  double ddpsi(double t) const {
    switch (kind_) {
      case Kind::Sphere:
        return -std::sin(t);
      case Kind::Dumbbell: {
        double s = std::sin(t), c = std::cos(t);
        return -s - 3.0 * d_ * (2.0 * s * c * c - s * s * s);
      }
      case Kind::Tabulated:
        return spline_->double_prime(t);
    }
    return 0.0;
  }

  /// Gauss curvature K = -psi''/psi, extended to the poles by the smooth
  /// limit -psi'''/psi' (psi and psi'' both vanish there).
  double gauss_curvature(double t) const {
    double delta = 1e-7 * t_max_;
    if (t < delta || t > t_max_ - delta) {
      switch (kind_) {
        case Kind::Sphere:
          return 1.0;
        case Kind::Dumbbell:
          return 1.0 + 6.0 * d_;
        case Kind::Tabulated: {
          // One-sided limit via samples just inside the pole.
          double t0 = (t < delta) ? 16.0 * delta : t_max_ - 16.0 * delta;
          return -ddpsi(t0) / psi(t0);
        }
      }
    }
    return -ddpsi(t) / psi(t);
  }

  /// Height function z(t) of the isometric embedding, z' = sqrt(1 - psi'^2).
  /// Cumulative from 0; throws EmbeddabilityError when |psi'| exceeds 1
  /// beyond roundoff anywhere on the sampled domain.
  double embedding_height(double t) const {
    namespace bq = boost::math::quadrature;
    auto integrand = [this](double s) {
      double g = 1.0 - dpsi(s) * dpsi(s);
      if (g < -1e-10) {
        throw EmbeddabilityError(
            "profile slope exceeds 1 at t = " + std::to_string(s) +
            "; no isometric surface of revolution exists");
      }
      return std::sqrt(std::max(0.0, g));
    };
    return bq::gauss_kronrod<double, 31>::integrate(integrand, 0.0, t, 10,
                                                    1e-13);
  }

  /// Dense check of |psi'| <= 1 + tol over the domain.
  bool embeddable(double tol = 1e-9) const {
    int n = 4096;
    for (int i = 0; i <= n; ++i) {
      double t = t_max_ * static_cast<double>(i) / n;
      if (std::abs(dpsi(t)) > 1.0 + tol) return false;
    }
    return true;
  }

  /// All interior roots of psi' located by sign-change bisection.
  /// Each root is a closed geodesic parallel (Clairaut).
  std::vector<GeodesicParallel> closed_geodesic_parallels() const {
    int n = 8192;
    std::vector<GeodesicParallel> out;
    double prev_t = t_max_ * (0.5 / n);
    double prev_v = dpsi(prev_t);
    for (int i = 1; i < n; ++i) {
      double t = t_max_ * (static_cast<double>(i) + 0.5) / n;
      double v = dpsi(t);
      if (prev_v == 0.0) prev_v = -v;  // grid hit a root exactly
      if (v == 0.0 || (prev_v < 0.0) != (v < 0.0)) {
        double lo = prev_t, hi = t, flo = prev_v;
        for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
          double mid = 0.5 * (lo + hi);
          double fm = dpsi(mid);
          if (fm == 0.0) {
            lo = hi = mid;
            break;
          }
          if ((flo < 0.0) != (fm < 0.0)) {
            hi = mid;
          } else {
            lo = mid;
            flo = fm;
          }
        }
        double root = 0.5 * (lo + hi);
        out.push_back({root, 2.0 * M_PI * psi(root), gauss_curvature(root)});
      }
      prev_t = t;
      prev_v = v;
    }
    return out;
  }

 private:
  using Spline = boost::math::interpolators::cardinal_cubic_b_spline<double>;

  void validate() const {
    double scale = std::max(1.0, psi(0.5 * t_max_));
    require(std::abs(psi(0.0)) <= 1e-8 * scale, "psi(0) must vanish");
    require(std::abs(psi(t_max_)) <= 1e-8 * scale, "psi(t_max) must vanish");
    require(std::abs(dpsi(0.0) - 1.0) <= 1e-6, "psi'(0) must equal 1");
    require(std::abs(dpsi(t_max_) + 1.0) <= 1e-6, "psi'(t_max) must equal -1");
    int n = 2048;
    for (int i = 1; i < n; ++i) {
      double t = t_max_ * static_cast<double>(i) / n;
      require(psi(t) > 0.0, "psi must be positive in the interior");
    }
  }

  Kind kind_ = Kind::Sphere;
  double d_ = 0.0;
  double t_max_ = M_PI;
  std::shared_ptr<Spline> spline_;
};

}  // namespace phaselab
