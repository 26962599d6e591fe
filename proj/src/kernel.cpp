#include "blossom/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace blossom {

void KernelSpec::validate() const {
  if (!(output_scale > 0.0) || !std::isfinite(output_scale))
    throw std::invalid_argument("KernelSpec: output_scale must be positive and finite");
  if (lengthscales.size() < 1)
    throw std::invalid_argument("KernelSpec: lengthscales must be non-empty");
  for (int k = 0; k < lengthscales.size(); ++k)
    if (!(lengthscales[k] > 0.0) || !std::isfinite(lengthscales[k]))
      throw std::invalid_argument("KernelSpec: lengthscales must be positive and finite");
}

int multi_index_order(const MultiIndex& m) {
  int s = 0;
  for (int k = 0; k < m.size(); ++k) s += m[k];
  return s;
}

namespace {

constexpr double kSqrt5 = 2.2360679774997896964091736687747;

// Derivatives of the radial profile h(s), s = |tau|^2, so that rho(tau) = h(s).
// Matern 5/2: rho = (1 + u + u^2/3) exp(-u) with u = sqrt(5) |tau|.
//   h'    = -(5/6)(1+u) e^{-u}
//   h''   = (25/12) e^{-u}
//   h'''  = -(125/24) e^{-u} / u
//   h'''' = (625/48) e^{-u} (u+1) / u^3
// SE: rho = exp(-s/2), h^(k) = (-1/2)^k exp(-s/2). No singular terms.
struct RadialDerivs {
  double rho, h1, h2, h3, h4;
  bool singular_terms_valid;  // false near u = 0 for Matern (terms are O(u) there)
};

RadialDerivs radial_derivs(KernelFamily family, double s) {
  RadialDerivs d{};
  if (family == KernelFamily::SquaredExponential) {
    double e = std::exp(-0.5 * s);
    d.rho = e;
    d.h1 = -0.5 * e;
    d.h2 = 0.25 * e;
    d.h3 = -0.125 * e;
    d.h4 = 0.0625 * e;
    d.singular_terms_valid = true;
    return d;
  }
  double u = kSqrt5 * std::sqrt(s);
  double e = std::exp(-u);
  d.rho = (1.0 + u + u * u / 3.0) * e;
  d.h1 = -(5.0 / 6.0) * (1.0 + u) * e;
  d.h2 = (25.0 / 12.0) * e;
  if (u > 1e-8) {
    d.h3 = -(125.0 / 24.0) * e / u;
    d.h4 = (625.0 / 48.0) * e * (u + 1.0) / (u * u * u);
    d.singular_terms_valid = true;
  } else {
    // h3 and h4 only ever appear multiplied by tau products of degree >= 2,
    // which are O(u^2); the products vanish in the limit.
    d.h3 = 0.0;
    d.h4 = 0.0;
    d.singular_terms_valid = false;
  }
  return d;
}

// D^m rho(tau) for |m| <= 4, with m given as a flat list of coordinate
// indices (repeats allowed). Chain rule through s = sum tau_k^2:
//   D_i        = 2 tau_i h'
//   D_ij       = 4 tau_i tau_j h'' + 2 d_ij h'
//   D_ijk      = 8 tau_i tau_j tau_k h''' + 4 (d_ij tau_k + d_ik tau_j + d_jk tau_i) h''
//   D_ijkl     = 16 tau_i tau_j tau_k tau_l h''''
//              + 8 (d_ij tau_k tau_l + ... 6 pairings) h'''
//              + 4 (d_ij d_kl + d_ik d_jl + d_il d_jk) h''
double rho_derivative(const RadialDerivs& h, const Vector& tau, const int* idx, int order) {
  auto t = [&](int q) { return tau[idx[q]]; };
  auto delta = [&](int q, int r) { return idx[q] == idx[r] ? 1.0 : 0.0; };
  switch (order) {
    case 0:
      return h.rho;
    case 1:
      return 2.0 * t(0) * h.h1;
    case 2:
      return 4.0 * t(0) * t(1) * h.h2 + 2.0 * delta(0, 1) * h.h1;
    case 3: {
      double sym = delta(0, 1) * t(2) + delta(0, 2) * t(1) + delta(1, 2) * t(0);
      double lead = h.singular_terms_valid ? 8.0 * t(0) * t(1) * t(2) * h.h3 : 0.0;
      return lead + 4.0 * sym * h.h2;
    }
    case 4: {
      double dd = delta(0, 1) * delta(2, 3) + delta(0, 2) * delta(1, 3) +
                  delta(0, 3) * delta(1, 2);
      double out = 4.0 * dd * h.h2;
      if (h.singular_terms_valid) {
        double pair = delta(0, 1) * t(2) * t(3) + delta(0, 2) * t(1) * t(3) +
                      delta(0, 3) * t(1) * t(2) + delta(1, 2) * t(0) * t(3) +
                      delta(1, 3) * t(0) * t(2) + delta(2, 3) * t(0) * t(1);
        out += 16.0 * t(0) * t(1) * t(2) * t(3) * h.h4 + 8.0 * pair * h.h3;
      }
      return out;
    }
    default:
      throw std::invalid_argument("rho_derivative: order > 4 not supported");
  }
}

}  // namespace

double kernel_value(const KernelSpec& spec, const Vector& a, const Vector& b) {
  MultiIndex zero = MultiIndex::Zero(a.size());
  return kernel_derivative(spec, a, b, zero, zero);
}

double kernel_derivative(const KernelSpec& spec, const Vector& a, const Vector& b,
                         const MultiIndex& ia, const MultiIndex& ib) {
  const int d = static_cast<int>(a.size());
  if (b.size() != d || ia.size() != d || ib.size() != d || spec.lengthscales.size() != d)
    throw std::invalid_argument("kernel_derivative: dimension mismatch");
  const int oa = multi_index_order(ia);
  const int ob = multi_index_order(ib);
  if (oa > 2 || ob > 2)
    throw std::invalid_argument("kernel_derivative: derivative order per argument is at most 2");

  Vector tau(d);
  double s = 0.0;
  for (int k = 0; k < d; ++k) {
    tau[k] = (a[k] - b[k]) / spec.lengthscales[k];
    s += tau[k] * tau[k];
  }

  // Expand ia + ib into a flat coordinate-index list.
  int idx[4];
  int order = 0;
  double lengthscale_factor = 1.0;
  for (int k = 0; k < d; ++k) {
    int reps = ia[k] + ib[k];
    for (int r = 0; r < reps; ++r) idx[order++] = k;
    for (int r = 0; r < reps; ++r) lengthscale_factor /= spec.lengthscales[k];
  }

  RadialDerivs h = radial_derivs(spec.family, s);
  double deriv = rho_derivative(h, tau, idx, order);
  double sign = (ob % 2 == 0) ? 1.0 : -1.0;
  return spec.output_scale * spec.output_scale * sign * lengthscale_factor * deriv;
}

}  // namespace blossom
