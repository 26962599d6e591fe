#include "blossom/math.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace blossom {

namespace {
std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t Rng::next_u64() { return splitmix64(state_); }

double Rng::uniform() {
  // 53-bit mantissa, uniform on [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
  return n == 0 ? 0 : next_u64() % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  double u2 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  double m = std::sqrt(-2.0 * std::log(u1));
  double a = 2.0 * std::numbers::pi * u2;
  spare_ = m * std::sin(a);
  has_spare_ = true;
  return m * std::cos(a);
}

Vector Rng::normal_vector(int n) {
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = normal();
  return v;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix_seed(mix_seed(a, b), c);
}

std::uint64_t hash_point(const Vector& x) {
  std::uint64_t h = 0x51a2b3c4d5e6f701ULL;
  for (int k = 0; k < x.size(); ++k) {
    std::uint64_t bits;
    double v = x[k];
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    h = mix_seed(h, bits);
  }
  return h;
}

double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_expected_excess(double mu, double sd, double a) {
  double gap = mu - a;
  if (sd <= 0.0) return std::max(gap, 0.0);
  double z = gap / sd;
  // For |z| large the closed form degenerates gracefully, but avoid inf*0.
  if (z > 40.0) return gap;
  if (z < -40.0) return 0.0;
  return gap * normal_cdf(z) + sd * normal_pdf(z);
}

std::vector<Vector> latin_hypercube(const Domain& domain, int n, Rng& rng) {
  const int d = domain.dim();
  std::vector<Vector> pts(n, Vector(d));
  std::vector<int> perm(n);
  for (int k = 0; k < d; ++k) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i)
      std::swap(perm[i], perm[static_cast<int>(rng.uniform_index(i + 1))]);
    for (int i = 0; i < n; ++i) {
      double u = (perm[i] + rng.uniform()) / n;
      pts[i][k] = domain.lower[k] + u * domain.width(k);
    }
  }
  return pts;
}

Vector r2_point(const Domain& domain, std::uint64_t k) {
  const int d = domain.dim();
  // Generalized golden-ratio recurrence; phi_d is the root of x^(d+1) = x + 1.
  double phi = 2.0;
  for (int it = 0; it < 32; ++it) phi = std::pow(1.0 + phi, 1.0 / (d + 1));
  Vector x(d);
  double a = 1.0;
  for (int j = 0; j < d; ++j) {
    a /= phi;
    double u = std::fmod(0.5 + a * static_cast<double>(k + 1), 1.0);
    x[j] = domain.lower[j] + u * domain.width(j);
  }
  return x;
}

void gauss_hermite(int n, std::vector<double>* nodes, std::vector<double>* weights) {
  Matrix J = Matrix::Zero(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    double b = std::sqrt(0.5 * (i + 1));
    J(i, i + 1) = b;
    J(i + 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(J);
  nodes->resize(n);
  weights->resize(n);
  const double sqrt_pi = std::sqrt(std::numbers::pi);
  for (int i = 0; i < n; ++i) {
    (*nodes)[i] = es.eigenvalues()[i];
    double v0 = es.eigenvectors()(0, i);
    (*weights)[i] = sqrt_pi * v0 * v0;
  }
}

std::vector<Vector> slice_sample(const std::function<double(const Vector&)>& log_density,
                                 const Domain& domain, Vector x0, int n_samples, int burn_in,
                                 int thin, Rng& rng) {
  const int d = domain.dim();
  Vector x = domain.clamp(std::move(x0));
  double logf = log_density(x);

  auto sweep = [&]() {
    for (int k = 0; k < d; ++k) {
      double level = logf + std::log(std::max(rng.uniform(), 1e-300));
      double w = 0.25 * domain.width(k);
      double lo = std::max(domain.lower[k], x[k] - w * rng.uniform());
      double hi = std::min(domain.upper[k], lo + w);
      Vector probe = x;
      // step out
      for (int s = 0; s < 8 && lo > domain.lower[k]; ++s) {
        probe[k] = lo;
        if (log_density(probe) <= level) break;
        lo = std::max(domain.lower[k], lo - w);
      }
      for (int s = 0; s < 8 && hi < domain.upper[k]; ++s) {
        probe[k] = hi;
        if (log_density(probe) <= level) break;
        hi = std::min(domain.upper[k], hi + w);
      }
      // shrink
      for (int s = 0; s < 64; ++s) {
        double cand = lo + (hi - lo) * rng.uniform();
        probe[k] = cand;
        double lf = log_density(probe);
        if (lf >= level) {
          x[k] = cand;
          logf = lf;
          break;
        }
        if (cand < x[k])
          lo = cand;
        else
          hi = cand;
        if (hi - lo < 1e-14 * domain.width(k)) break;
      }
    }
  };

  for (int i = 0; i < burn_in; ++i) sweep();
  std::vector<Vector> out;
  out.reserve(n_samples);
  while (static_cast<int>(out.size()) < n_samples) {
    for (int t = 0; t < thin; ++t) sweep();
    out.push_back(x);
  }
  return out;
}

Vector nelder_mead(const std::function<double(const Vector&)>& f, const Domain& domain,
                   const Vector& x0, double initial_step, int max_evals, double* best_value) {
  const int d = domain.dim();
  int evals = 0;
  auto eval = [&](const Vector& v) {
    ++evals;
    return f(domain.clamp(v));
  };

  std::vector<Vector> simplex(d + 1);
  std::vector<double> fv(d + 1);
  simplex[0] = domain.clamp(x0);
  fv[0] = eval(simplex[0]);
  for (int k = 0; k < d; ++k) {
    Vector v = simplex[0];
    double step = initial_step * domain.width(k);
    v[k] = (v[k] + step <= domain.upper[k]) ? v[k] + step : v[k] - step;
    simplex[k + 1] = v;
    fv[k + 1] = eval(v);
  }

  auto order = [&]() {
    for (int i = 1; i <= d; ++i) {
      Vector v = simplex[i];
      double fi = fv[i];
      int j = i - 1;
      while (j >= 0 && fv[j] > fi) {
        simplex[j + 1] = simplex[j];
        fv[j + 1] = fv[j];
        --j;
      }
      simplex[j + 1] = v;
      fv[j + 1] = fi;
    }
  };
  order();

  while (evals < max_evals) {
    Vector centroid = Vector::Zero(d);
    for (int i = 0; i < d; ++i) centroid += simplex[i];
    centroid /= d;

    Vector xr = domain.clamp(centroid + (centroid - simplex[d]));
    double fr = eval(xr);
    if (fr < fv[0]) {
      Vector xe = domain.clamp(centroid + 2.0 * (centroid - simplex[d]));
      double fe = eval(xe);
      if (fe < fr) {
        simplex[d] = xe;
        fv[d] = fe;
      } else {
        simplex[d] = xr;
        fv[d] = fr;
      }
    } else if (fr < fv[d - 1]) {
      simplex[d] = xr;
      fv[d] = fr;
    } else {
      Vector xc = domain.clamp(centroid + 0.5 * (simplex[d] - centroid));
      double fc = eval(xc);
      if (fc < fv[d]) {
        simplex[d] = xc;
        fv[d] = fc;
      } else {
        for (int i = 1; i <= d; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          fv[i] = eval(simplex[i]);
          if (evals >= max_evals) break;
        }
      }
    }
    order();
    double spread = (simplex[d] - simplex[0]).norm();
    if (spread < 1e-12 && std::abs(fv[d] - fv[0]) < 1e-15) break;
  }

  if (best_value) *best_value = fv[0];
  return simplex[0];
}

}  // namespace blossom
