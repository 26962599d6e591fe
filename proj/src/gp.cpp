#include "blossom/gp.hpp"

#include "blossom/local_opt.hpp"
#include "blossom/math.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace blossom {

namespace {

double sample_sd(const std::vector<Observation>& data) {
  if (data.size() < 2) return 0.0;
  double mean = 0.0;
  for (const auto& ob : data) mean += ob.y;
  mean /= data.size();
  double ss = 0.0;
  for (const auto& ob : data) ss += (ob.y - mean) * (ob.y - mean);
  return std::sqrt(ss / (data.size() - 1));
}

}  // namespace

GpModel::GpModel(KernelSpec kernel, std::vector<Observation> data, Domain domain)
    : kernel_(std::move(kernel)), data_(std::move(data)), domain_(std::move(domain)) {
  kernel_.validate();
  const int d = domain_.dim();
  const int n = static_cast<int>(data_.size());

  half_width_.resize(d);
  for (int k = 0; k < d; ++k) half_width_[k] = 0.5 * domain_.width(k);

  // Standardization needs at least two points; a singleton keeps the raw
  // zero-mean prior so the posterior dips (or peaks) at the lone observation.
  if (n >= 2) {
    double mean = 0.0;
    for (const auto& ob : data_) mean += ob.y;
    y_mean_ = mean / n;
    double sd = sample_sd(data_);
    y_sd_ = (sd > 1e-12 * std::max(1.0, std::abs(y_mean_))) ? sd : 1.0;
  }

  norm_kernel_ = kernel_;
  norm_kernel_.output_scale = kernel_.output_scale / y_sd_;
  for (int k = 0; k < d; ++k) norm_kernel_.lengthscales[k] = kernel_.lengthscales[k] / half_width_[k];

  x_norm_.resize(n, d);
  y_norm_.resize(n);
  Vector mid = domain_.center();
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) x_norm_(i, k) = (data_[i].x[k] - mid[k]) / half_width_[k];
    y_norm_[i] = (data_[i].y - y_mean_) / y_sd_;
  }

  if (n > 0) {
    Matrix K(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        double v = kernel_value(norm_kernel_, x_norm_.row(i), x_norm_.row(j));
        K(i, j) = v;
        K(j, i) = v;
      }
    }
    chol_ = cholesky_with_ladder(K, 1e-2, 1.0);
    alpha_ = chol_.solve(y_norm_);
  }
}

Vector GpModel::normalize_point(const Vector& x) const {
  Vector mid = domain_.center();
  Vector z(x.size());
  for (int k = 0; k < x.size(); ++k) z[k] = (x[k] - mid[k]) / half_width_[k];
  return z;
}

void GpModel::posterior_normalized(const std::vector<DerivativeSpec>& queries, Vector* mean,
                                   Matrix* cov, std::vector<double>* unit_factors,
                                   std::vector<bool>* is_order0) const {
  const int d = domain_.dim();
  const int m = static_cast<int>(queries.size());
  const int n = size();
  if (m == 0) throw std::invalid_argument("posterior_joint: queries must be non-empty");

  std::vector<Vector> qn(m);
  unit_factors->assign(m, 1.0);
  is_order0->assign(m, false);
  for (int i = 0; i < m; ++i) {
    const auto& q = queries[i];
    if (q.point.size() != d || q.multi_index.size() != d)
      throw std::invalid_argument("posterior_joint: query dimension mismatch");
    int order = multi_index_order(q.multi_index);
    if (order > 2)
      throw std::invalid_argument("posterior_joint: derivative order at most 2");
    (*is_order0)[i] = (order == 0);
    qn[i] = normalize_point(q.point);
    double f = y_sd_;
    for (int k = 0; k < d; ++k)
      for (int r = 0; r < q.multi_index[k]; ++r) f /= half_width_[k];
    (*unit_factors)[i] = f;
  }

  MultiIndex zero = MultiIndex::Zero(d);
  Matrix prior(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = kernel_derivative(norm_kernel_, qn[i], qn[j], queries[i].multi_index,
                                   queries[j].multi_index);
      prior(i, j) = v;
      prior(j, i) = v;
    }

  if (n == 0) {
    *mean = Vector::Zero(m);
    *cov = prior;
    return;
  }

  Matrix cross(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      cross(i, j) =
          kernel_derivative(norm_kernel_, qn[i], x_norm_.row(j), queries[i].multi_index, zero);

  *mean = cross * alpha_;
  Matrix v = chol_.solve_lower(Matrix(cross.transpose()));
  *cov = prior - v.transpose() * v;
  *cov = 0.5 * (*cov + cov->transpose());
}

GaussianBelief GpModel::posterior_joint(const std::vector<DerivativeSpec>& queries) const {
  Vector mean_n;
  Matrix cov_n;
  std::vector<double> factors;
  std::vector<bool> order0;
  posterior_normalized(queries, &mean_n, &cov_n, &factors, &order0);

  const int m = static_cast<int>(queries.size());
  GaussianBelief out;
  out.mean.resize(m);
  out.covariance.resize(m, m);
  for (int i = 0; i < m; ++i)
    out.mean[i] = mean_n[i] * factors[i] + (order0[i] ? y_mean_ : 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) out.covariance(i, j) = cov_n(i, j) * factors[i] * factors[j];
  return out;
}

void GpModel::mean_var(const Vector& x, double* mean, double* var) const {
  const int n = size();
  Vector xn = normalize_point(x);
  double prior = norm_kernel_.output_scale * norm_kernel_.output_scale;
  if (n == 0) {
    *mean = y_mean_;
    *var = prior * y_sd_ * y_sd_;
    return;
  }
  Vector k_star(n);
  for (int j = 0; j < n; ++j) k_star[j] = kernel_value(norm_kernel_, xn, x_norm_.row(j));
  Vector v = chol_.solve_lower(k_star);
  double mu = k_star.dot(alpha_);
  double s2 = std::max(0.0, prior - v.squaredNorm());
  *mean = mu * y_sd_ + y_mean_;
  *var = s2 * y_sd_ * y_sd_;
}

double GpModel::posterior_mean(const Vector& x) const {
  double m, v;
  mean_var(x, &m, &v);
  return m;
}

HessianBelief GpModel::infer_hessian(const Vector& x, const Domain& domain) const {
  const int d = domain.dim();
  std::vector<int> active;
  for (int k = 0; k < d; ++k) {
    double tol = 1e-9 * domain.width(k);
    if (x[k] > domain.lower[k] + tol && x[k] < domain.upper[k] - tol) active.push_back(k);
  }
  if (active.empty())
    throw std::invalid_argument("infer_hessian: no interior dimensions at this point");

  const int dp = static_cast<int>(active.size());
  std::vector<DerivativeSpec> queries;
  queries.reserve(dp * (dp + 1) / 2);
  for (int i = 0; i < dp; ++i)
    for (int j = i; j < dp; ++j) {
      DerivativeSpec q;
      q.point = x;
      q.multi_index = MultiIndex::Zero(d);
      q.multi_index[active[i]] += 1;
      q.multi_index[active[j]] += 1;
      queries.push_back(std::move(q));
    }

  HessianBelief out;
  out.active_dims = active;
  out.triangle = posterior_joint(queries);
  out.mean = Matrix::Zero(dp, dp);
  int idx = 0;
  for (int i = 0; i < dp; ++i)
    for (int j = i; j < dp; ++j) {
      out.mean(i, j) = out.triangle.mean[idx];
      out.mean(j, i) = out.triangle.mean[idx];
      ++idx;
    }
  return out;
}

void GpModel::standardized_joint(const std::vector<Vector>& points, Vector* mean,
                                 Matrix* cov) const {
  std::vector<DerivativeSpec> queries;
  queries.reserve(points.size());
  for (const auto& p : points) queries.push_back(DerivativeSpec::value(p));
  std::vector<double> factors;
  std::vector<bool> order0;
  posterior_normalized(queries, mean, cov, &factors, &order0);
}

Matrix GpModel::cross_solves(const std::vector<Vector>& points) const {
  const int n = size();
  const int m = static_cast<int>(points.size());
  Matrix K(n, m);
  for (int j = 0; j < m; ++j) {
    Vector pj = normalize_point(points[j]);
    for (int i = 0; i < n; ++i) K(i, j) = kernel_value(norm_kernel_, x_norm_.row(i), pj);
  }
  return chol_.solve_lower(K);
}

void GpModel::cross_posterior(const Vector& x, const std::vector<Vector>& points,
                              const Matrix& solves, double* mean, double* var,
                              Vector* cov) const {
  const int n = size();
  const int m = static_cast<int>(points.size());
  Vector xn = normalize_point(x);
  double prior = norm_kernel_.output_scale * norm_kernel_.output_scale;

  cov->resize(m);
  if (n == 0) {
    *mean = 0.0;
    *var = prior;
    for (int j = 0; j < m; ++j)
      (*cov)[j] = kernel_value(norm_kernel_, xn, normalize_point(points[j]));
    return;
  }
  Vector k_x(n);
  for (int i = 0; i < n; ++i) k_x[i] = kernel_value(norm_kernel_, xn, x_norm_.row(i));
  Vector v_x = chol_.solve_lower(k_x);
  *mean = k_x.dot(alpha_);
  *var = std::max(0.0, prior - v_x.squaredNorm());
  for (int j = 0; j < m; ++j)
    (*cov)[j] = kernel_value(norm_kernel_, xn, normalize_point(points[j])) -
                v_x.dot(solves.col(j));
}

Matrix GpModel::draw_posterior(const std::vector<Vector>& points, int n_draws,
                               std::uint64_t seed) const {
  if (n_draws < 1) throw std::invalid_argument("draw_posterior: n_draws >= 1 required");
  Vector mean_n;
  Matrix cov_n;
  standardized_joint(points, &mean_n, &cov_n);
  JitteredCholesky f = cholesky_with_ladder(cov_n, 1e-2, 1.0);
  const int m = static_cast<int>(points.size());
  Rng rng(mix_seed(seed, 0x9d7a));
  Matrix out(n_draws, m);
  for (int i = 0; i < n_draws; ++i) {
    Vector z = rng.normal_vector(m);
    Vector s = mean_n + f.L * z;
    for (int j = 0; j < m; ++j) out(i, j) = y_mean_ + y_sd_ * s[j];
  }
  return out;
}

KernelSpec fit_hyperparameters(const std::vector<Observation>& data, const Domain& domain,
                               std::uint64_t seed, const FitOptions& options,
                               FitDiagnostics* diagnostics) {
  const int d = domain.dim();
  const int n = static_cast<int>(data.size());
  if (n < 2) throw std::invalid_argument("fit_hyperparameters: need at least 2 observations");

  FitDiagnostics local_diag;
  FitDiagnostics* diag = diagnostics ? diagnostics : &local_diag;
  *diag = FitDiagnostics{};

  Vector half_width(d);
  for (int k = 0; k < d; ++k) half_width[k] = 0.5 * domain.width(k);

  auto prior_mode_spec = [&]() {
    KernelSpec spec;
    spec.family = options.family;
    spec.lengthscales.resize(d);
    for (int k = 0; k < d; ++k) spec.lengthscales[k] = 0.25 * domain.width(k);
    double sd = sample_sd(data);
    spec.output_scale = sd > 0.0 ? sd : 1.0;
    return spec;
  };

  double y_sd = sample_sd(data);
  double y_mean = 0.0;
  for (const auto& ob : data) y_mean += ob.y;
  y_mean /= n;
  if (y_sd <= 1e-12 * std::max(1.0, std::abs(y_mean))) {
    diag->degenerate_data = true;
    return prior_mode_spec();
  }

  // Normalized data for the likelihood evaluations.
  Matrix x_norm(n, d);
  Vector y_norm(n);
  Vector mid = 0.5 * (domain.lower + domain.upper);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) x_norm(i, k) = (data[i].x[k] - mid[k]) / half_width[k];
    y_norm[i] = (data[i].y - y_mean) / y_sd;
  }

  // theta = (log output_scale, log lengthscale_1..d) in normalized units.
  const int dim_theta = d + 1;
  const Vector prior_median = [&]() {
    Vector v(dim_theta);
    v[0] = 0.0;                      // output scale median 1
    for (int k = 0; k < d; ++k) v[k + 1] = std::log(0.5);  // lengthscale median 0.5
    return v;
  }();
  constexpr double prior_log_sd = 1.0;

  auto negative_map_objective = [&](const Vector& theta) {
    KernelSpec spec;
    spec.family = options.family;
    spec.output_scale = std::exp(theta[0]);
    spec.lengthscales.resize(d);
    for (int k = 0; k < d; ++k) spec.lengthscales[k] = std::exp(theta[k + 1]);
    Matrix K(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j) {
        double v = kernel_value(spec, x_norm.row(i), x_norm.row(j));
        K(i, j) = v;
        K(j, i) = v;
      }
    double lml;
    try {
      // The ladder scales with the trial output variance here so that the
      // search landscape stays smooth at every theta; the published model
      // factorization (GpModel) keeps the absolute rungs.
      double scale = std::max(1.0, spec.output_scale * spec.output_scale);
      JitteredCholesky f = cholesky_with_ladder(K, 1e-2, scale);
      Vector alpha = f.solve(y_norm);
      lml = -0.5 * y_norm.dot(alpha) - f.log_det_half() -
            0.5 * n * std::log(2.0 * std::numbers::pi);
    } catch (const FactorizationError&) {
      return 1e100;
    }
    double log_prior = 0.0;
    for (int i = 0; i < dim_theta; ++i) {
      double z = (theta[i] - prior_median[i]) / prior_log_sd;
      log_prior += -0.5 * z * z;
    }
    return -(lml + log_prior);
  };

  Domain theta_box = Domain::cube(dim_theta, std::log(1e-2), std::log(1e2));
  RescaledProblem identity = RescaledProblem::identity(theta_box, Vector::Zero(dim_theta));
  int max_evals = options.max_evals_per_start > 0 ? options.max_evals_per_start
                                                  : 120 * dim_theta;

  // Starts: the prior median, random prior draws, and the two best of a
  // coarse shared-lengthscale grid (the marginal-likelihood surface often has
  // a narrow basin well away from the median once evaluations cluster).
  std::vector<Vector> starts;
  starts.push_back(prior_median);
  Rng rng(mix_seed(seed, 0xF17));
  for (int s = 0; s < options.n_restarts; ++s) {
    Vector theta0 = prior_median;
    for (int i = 0; i < dim_theta; ++i) theta0[i] += prior_log_sd * rng.normal();
    starts.push_back(theta_box.clamp(theta0));
  }
  {
    std::vector<std::pair<double, Vector>> grid;
    for (double ls : {0.05, 0.1, 0.2, 0.4, 0.8}) {
      Vector theta0 = prior_median;
      for (int k = 0; k < d; ++k) theta0[k + 1] = std::log(ls);
      grid.emplace_back(negative_map_objective(theta0), theta0);
    }
    std::sort(grid.begin(), grid.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    starts.push_back(grid[0].second);
    starts.push_back(grid[1].second);
  }

  Vector best_theta = prior_median;
  double best_value = std::numeric_limits<double>::infinity();
  for (std::size_t start = 0; start < starts.size(); ++start) {
    LocalResult r = bfgs_minimize(negative_map_objective, identity, starts[start], 1e-5,
                                  max_evals);
    if (std::isfinite(r.y_final) && r.y_final < best_value) {
      best_value = r.y_final;
      best_theta = r.x_final;
      diag->winning_start = static_cast<int>(start);
    }
  }
  diag->objective = best_value;

  KernelSpec spec;
  spec.family = options.family;
  spec.output_scale = std::exp(best_theta[0]) * y_sd;
  spec.lengthscales.resize(d);
  for (int k = 0; k < d; ++k) spec.lengthscales[k] = std::exp(best_theta[k + 1]) * half_width[k];
  return spec;
}

}  // namespace blossom
