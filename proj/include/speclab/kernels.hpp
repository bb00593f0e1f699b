#pragma once

#include <cmath>
#include <string>

#include "speclab/errors.hpp"
#include "speclab/quadrature.hpp"

namespace speclab {

enum class KernelKind { Tent, Smoothstep };

/// Compactly supported non-increasing profile eta on [0,1] with eta(0)=1,
/// eta(1)=0, eta(1/2)>0, Lipschitz on the support.
struct Kernel {
  KernelKind kind = KernelKind::Tent;

  double operator()(double t) const {
    if (t >= 1.0) return 0.0;
    if (t < 0.0) t = 0.0;
    switch (kind) {
      case KernelKind::Tent:
        return 1.0 - t;
      case KernelKind::Smoothstep:
        return 1.0 - 3.0 * t * t + 2.0 * t * t * t;
    }
    return 0.0;
  }

  std::string name() const { return kind == KernelKind::Tent ? "tent" : "smoothstep"; }
};

inline Kernel make_kernel(const std::string& name) {
  if (name == "tent") return Kernel{KernelKind::Tent};
  if (name == "smoothstep") return Kernel{KernelKind::Smoothstep};
  throw ConfigError("make_kernel: unknown kernel '" + name + "'");
}

struct KernelMoments {
  double mass = 0.0;       // integral of eta(|x|) over R^d
  double sigma_eta = 0.0;  // integral of |y_1|^2 eta(|y|) over R^d
};

namespace detail {

// surface area of the unit sphere S^{d-1}
inline double sphere_area(int d) {
  switch (d) {
    case 1: return 2.0;
    case 2: return 2.0 * M_PI;
    case 3: return 4.0 * M_PI;
  }
  throw ConfigError("kernel_moments: d must be 1, 2 or 3");
}

}  // namespace detail

/// Radial quadrature of the kernel mass and second moment in dimension d.
/// Closed forms exist for the built-in kernels; they are used as test oracles
/// only, this path is always quadrature.
inline KernelMoments kernel_moments(const Kernel& eta, int d) {
  const double area = detail::sphere_area(d);
  KernelMoments mom;
  mom.mass = area * integrate_rel(
                        [&](double r) { return eta(r) * std::pow(r, d - 1); }, 0.0, 1.0, 1e-11);
  // with |y_1|^2 = r^2 cos^2, the angular average of cos^2 over S^{d-1} is 1/d
  mom.sigma_eta =
      (area / d) *
      integrate_rel([&](double r) { return eta(r) * std::pow(r, d + 1); }, 0.0, 1.0, 1e-11);
  if (mom.mass <= 0.0 || mom.sigma_eta <= 0.0)
    throw NumericalError("kernel_moments: non-positive moment");
  return mom;
}

}  // namespace speclab
