#pragma once

#include "blossom/types.hpp"

namespace blossom {

enum class KernelFamily { Matern52, SquaredExponential };

/// Stationary ARD kernel: k(a,b) = output_scale^2 * rho(tau) with
/// tau_k = (a_k - b_k) / lengthscales_k.
struct KernelSpec {
  KernelFamily family = KernelFamily::Matern52;
  double output_scale = 1.0;
  Vector lengthscales;

  void validate() const;
};

/// k(a, b).
double kernel_value(const KernelSpec& spec, const Vector& a, const Vector& b);

/// Mixed derivative d^|ia|/da^ia d^|ib|/db^ib k(a, b) for derivative orders
/// |ia| <= 2 and |ib| <= 2 (total order up to 4). Exactly symmetric under
/// swapping (a, ia) <-> (b, ib).
///
/// The Matern 5/2 fourth-order terms have removable singularities at a = b;
/// those terms vanish in the limit and are dropped below a small scaled
/// separation, which also covers the (2,2) value at zero lag.
double kernel_derivative(const KernelSpec& spec, const Vector& a, const Vector& b,
                         const MultiIndex& ia, const MultiIndex& ib);

/// Sum of multi-index entries.
int multi_index_order(const MultiIndex& m);

}  // namespace blossom
