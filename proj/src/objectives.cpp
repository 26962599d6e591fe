#include "blossom/objectives.hpp"

#include "blossom/math.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace blossom {

namespace {

// Dense quasi-random scan plus simplex refinement from the best starts.
// Returns the refined minimum and the deduplicated minimizers attaining it.
void refine_minimum(const std::function<double(const Vector&)>& f, const Domain& domain,
                    double* minimum, std::vector<Vector>* minimizers) {
  const int d = domain.dim();
  const int n_scan = 20000 * d;
  struct Candidate {
    Vector x;
    double value;
  };
  std::vector<Candidate> leaders;
  for (int i = 0; i < n_scan; ++i) {
    Vector x = r2_point(domain, static_cast<std::uint64_t>(i));
    double v = f(x);
    leaders.push_back({std::move(x), v});
    std::sort(leaders.begin(), leaders.end(),
              [](const Candidate& a, const Candidate& b) { return a.value < b.value; });
    if (leaders.size() > 24) leaders.resize(24);
  }

  std::vector<Candidate> refined;
  for (const auto& s : leaders) {
    double v;
    Vector x = nelder_mead(f, domain, s.x, 0.02, 400 * d, &v);
    // polish once more from the result with a smaller step
    x = nelder_mead(f, domain, x, 0.002, 400 * d, &v);
    refined.push_back({std::move(x), v});
  }
  double best = refined.front().value;
  for (const auto& r : refined) best = std::min(best, r.value);

  minimizers->clear();
  for (const auto& r : refined) {
    if (r.value > best + 1e-7 * std::max(1.0, std::abs(best))) continue;
    bool duplicate = false;
    for (const auto& m : *minimizers)
      if ((m - r.x).norm() < 1e-3 * std::sqrt(static_cast<double>(d))) duplicate = true;
    if (!duplicate) minimizers->push_back(r.x);
  }
  *minimum = best;
}

double branin(const Vector& v) {
  const double x = v[0], y = v[1];
  const double a = 1.0;
  const double b = 5.1 / (4.0 * std::numbers::pi * std::numbers::pi);
  const double c = 5.0 / std::numbers::pi;
  const double r = 6.0;
  const double s = 10.0;
  const double t = 1.0 / (8.0 * std::numbers::pi);
  double u = y - b * x * x + c * x - r;
  return a * u * u + s * (1.0 - t) * std::cos(x) + s;
}

double camel3(const Vector& v) {
  const double x = v[0], y = v[1];
  return 2.0 * x * x - 1.05 * std::pow(x, 4) + std::pow(x, 6) / 6.0 + x * y + y * y;
}

double camel6(const Vector& v) {
  const double x = v[0], y = v[1];
  return (4.0 - 2.1 * x * x + std::pow(x, 4) / 3.0) * x * x + x * y +
         (-4.0 + 4.0 * y * y) * y * y;
}

// Hartmann family with the usual four-component exponential form. The 4D
// variant uses the first four input dimensions of the 6D coefficient tables.
constexpr double kHartmannAlpha[4] = {1.0, 1.2, 3.0, 3.2};

constexpr double kHartmann3A[4][3] = {
    {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}, {3.0, 10.0, 30.0}, {0.1, 10.0, 35.0}};
constexpr double kHartmann3P[4][3] = {{0.3689, 0.1170, 0.2673},
                                      {0.4699, 0.4387, 0.7470},
                                      {0.1091, 0.8732, 0.5547},
                                      {0.0381, 0.5743, 0.8828}};

constexpr double kHartmann6A[4][6] = {{10.0, 3.0, 17.0, 3.5, 1.7, 8.0},
                                      {0.05, 10.0, 17.0, 0.1, 8.0, 14.0},
                                      {3.0, 3.5, 1.7, 10.0, 17.0, 8.0},
                                      {17.0, 8.0, 0.05, 10.0, 0.1, 14.0}};
constexpr double kHartmann6P[4][6] = {{0.1312, 0.1696, 0.5569, 0.0124, 0.8283, 0.5886},
                                      {0.2329, 0.4135, 0.8307, 0.3736, 0.1004, 0.9991},
                                      {0.2348, 0.1451, 0.3522, 0.2883, 0.3047, 0.6650},
                                      {0.4047, 0.8828, 0.8732, 0.5743, 0.1091, 0.0381}};

double hartmann3(const Vector& v) {
  double out = 0.0;
  for (int i = 0; i < 4; ++i) {
    double e = 0.0;
    for (int j = 0; j < 3; ++j) {
      double diff = v[j] - kHartmann3P[i][j];
      e += kHartmann3A[i][j] * diff * diff;
    }
    out -= kHartmannAlpha[i] * std::exp(-e);
  }
  return out;
}

double hartmann_from6(const Vector& v, int dims) {
  double out = 0.0;
  for (int i = 0; i < 4; ++i) {
    double e = 0.0;
    for (int j = 0; j < dims; ++j) {
      double diff = v[j] - kHartmann6P[i][j];
      e += kHartmann6A[i][j] * diff * diff;
    }
    out -= kHartmannAlpha[i] * std::exp(-e);
  }
  return out;
}

Benchmark build_benchmark(const std::string& name) {
  Benchmark b;
  b.name = name;
  if (name == "branin") {
    b.dimension = 2;
    b.domain = Domain((Vector(2) << -5.0, 0.0).finished(), (Vector(2) << 10.0, 15.0).finished());
    b.evaluate = branin;
  } else if (name == "camel3") {
    b.dimension = 2;
    b.domain = Domain::cube(2, -5.0, 5.0);
    b.evaluate = camel3;
  } else if (name == "camel6") {
    b.dimension = 2;
    b.domain = Domain((Vector(2) << -3.0, -2.0).finished(), (Vector(2) << 3.0, 2.0).finished());
    b.evaluate = camel6;
  } else if (name == "hartmann3") {
    b.dimension = 3;
    b.domain = Domain::cube(3, 0.0, 1.0);
    b.evaluate = hartmann3;
  } else if (name == "hartmann4") {
    b.dimension = 4;
    b.domain = Domain::cube(4, 0.0, 1.0);
    b.evaluate = [](const Vector& v) { return hartmann_from6(v, 4); };
  } else if (name == "hartmann6") {
    b.dimension = 6;
    b.domain = Domain::cube(6, 0.0, 1.0);
    b.evaluate = [](const Vector& v) { return hartmann_from6(v, 6); };
  } else {
    std::string msg = "make_benchmark: unknown objective '" + name + "'; supported:";
    for (const auto& n : benchmark_names()) msg += " " + n;
    throw std::invalid_argument(msg);
  }

  double minimum;
  std::vector<Vector> minimizers;
  refine_minimum(b.evaluate, b.domain, &minimum, &minimizers);
  b.known_minimum = minimum;
  b.known_minimizers = std::move(minimizers);
  return b;
}

}  // namespace

std::vector<std::string> benchmark_names() {
  return {"branin", "camel3", "camel6", "hartmann3", "hartmann4", "hartmann6"};
}

Benchmark make_benchmark(const std::string& name) {
  static std::mutex mutex;
  static std::unordered_map<std::string, Benchmark> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, build_benchmark(name)).first;
  return it->second;
}

Benchmark log_transform(const Benchmark& b) {
  if (!b.known_minimum.has_value())
    throw std::invalid_argument("log_transform: benchmark has no known minimum");
  Benchmark out = b;
  out.name = b.name + "-log";
  double y_star = *b.known_minimum;
  auto inner = b.evaluate;
  out.evaluate = [inner, y_star](const Vector& x) {
    return std::log(inner(x) - y_star + 1.0);
  };
  out.known_minimum = 0.0;
  return out;
}

GpDrawObjective::GpDrawObjective(KernelSpec kernel, Domain domain, std::uint64_t seed)
    : kernel_(std::move(kernel)), domain_(std::move(domain)), seed_(seed) {
  kernel_.validate();
}

double GpDrawObjective::operator()(const Vector& x) {
  std::uint64_t h = hash_point(x);
  if (auto it = exact_lookup_.find(h); it != exact_lookup_.end())
    for (int idx : it->second)
      if ((points_[idx].array() == x.array()).all()) return values_[idx];

  double value = conditional_draw(x);
  int idx = static_cast<int>(points_.size());
  points_.push_back(x);
  values_.push_back(value);
  exact_lookup_[h].push_back(idx);
  return value;
}

double GpDrawObjective::conditional_draw(const Vector& x) {
  const int n = static_cast<int>(points_.size());
  const double prior = kernel_.output_scale * kernel_.output_scale;
  const double floor = 1e-12 * prior;

  Rng rng(mix_seed(seed_, hash_point(x)));
  double mean, var;
  Vector w;
  if (n == 0) {
    mean = 0.0;
    var = prior;
  } else {
    Vector k(n);
    for (int i = 0; i < n; ++i) k[i] = kernel_value(kernel_, points_[i], x);
    w = factor_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solve(k);
    mean = w.dot(whitened_.head(n));
    var = prior - w.squaredNorm();
  }
  double pivot2 = std::max(var + floor, floor);
  double value = mean + std::sqrt(std::max(var, 0.0)) * rng.normal();

  // Append one row to the Cholesky factor of the cache covariance. Storage
  // grows geometrically so the amortized append cost stays O(n^2).
  if (factor_.rows() < n + 1) {
    int cap = std::max<int>(64, static_cast<int>(factor_.rows()) * 2);
    while (cap < n + 1) cap *= 2;
    Matrix bigger = Matrix::Zero(cap, cap);
    if (n > 0) bigger.topLeftCorner(n, n) = factor_.topLeftCorner(n, n);
    factor_ = std::move(bigger);
    Vector wider = Vector::Zero(cap);
    if (n > 0) wider.head(n) = whitened_.head(n);
    whitened_ = std::move(wider);
  }
  if (n > 0) factor_.block(n, 0, 1, n) = w.transpose();
  factor_(n, n) = std::sqrt(pivot2);
  whitened_[n] = (value - mean) / factor_(n, n);
  return value;
}

}  // namespace blossom
