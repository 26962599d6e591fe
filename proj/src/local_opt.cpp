#include "blossom/local_opt.hpp"

#include "blossom/gp.hpp"
#include "blossom/linalg.hpp"

#include <cmath>
#include <limits>

namespace blossom {

Vector RescaledProblem::to_z(const Vector& x_full) const {
  Vector xa(active_count());
  for (int i = 0; i < active_count(); ++i)
    xa[i] = x_full[active_dims[i]] - origin[active_dims[i]];
  return transform * xa;
}

Vector RescaledProblem::to_x(const Vector& z) const {
  Vector xa = inverse * z;
  Vector x = origin;
  for (int i = 0; i < active_count(); ++i) x[active_dims[i]] += xa[i];
  return x;
}

RescaledProblem RescaledProblem::identity(Domain domain, Vector origin) {
  RescaledProblem p;
  const int d = domain.dim();
  p.transform = Matrix::Identity(d, d);
  p.inverse = Matrix::Identity(d, d);
  p.hessian_estimate = Matrix::Identity(d, d);
  p.origin = std::move(origin);
  p.domain = std::move(domain);
  p.active_dims.resize(d);
  for (int k = 0; k < d; ++k) p.active_dims[k] = k;
  return p;
}

RescaledProblem RescaledProblem::from_hessian(const Matrix& hessian, Vector origin, Domain domain,
                                              std::vector<int> active_dims) {
  const int dp = static_cast<int>(hessian.rows());
  RescaledProblem p;
  p.origin = std::move(origin);
  p.domain = std::move(domain);
  p.active_dims = std::move(active_dims);

  Eigen::LLT<Matrix> llt(hessian);
  if (llt.info() == Eigen::Success) {
    Matrix C = llt.matrixL();
    p.transform = C.transpose();
    p.inverse = p.transform.inverse();
    p.hessian_estimate = hessian;
  } else {
    p.transform = Matrix::Identity(dp, dp);
    p.inverse = Matrix::Identity(dp, dp);
    p.hessian_estimate = Matrix::Identity(dp, dp);
    p.identity_fallback = true;
  }
  return p;
}

namespace {

struct Evaluator {
  const std::function<double(const Vector&)>& objective;
  const RescaledProblem& problem;
  int max_evals;
  int n_evals = 0;
  int n_grad_evals = 0;
  bool non_finite = false;
  bool budget_hit = false;

  double value(const Vector& z) {
    if (n_evals >= max_evals) {
      budget_hit = true;
      return std::numeric_limits<double>::infinity();
    }
    ++n_evals;
    double y = objective(problem.domain.clamp(problem.to_x(z)));
    if (!std::isfinite(y)) non_finite = true;
    return y;
  }

  // Central differences, step 1e-6 in z units.
  bool gradient(const Vector& z, Vector* g) {
    const int d = static_cast<int>(z.size());
    if (n_evals + 2 * d > max_evals) {
      budget_hit = true;
      return false;
    }
    ++n_grad_evals;
    constexpr double h = 1e-6;
    g->resize(d);
    for (int k = 0; k < d; ++k) {
      Vector zp = z, zm = z;
      zp[k] += h;
      zm[k] -= h;
      n_evals += 2;
      double fp = objective(problem.domain.clamp(problem.to_x(zp)));
      double fm = objective(problem.domain.clamp(problem.to_x(zm)));
      if (!std::isfinite(fp) || !std::isfinite(fm)) {
        non_finite = true;
        return false;
      }
      (*g)[k] = (fp - fm) / (2.0 * h);
    }
    return true;
  }
};

// Gradient components in z whose x-space image pushes a bound-touching
// dimension out of the box are projected away.
Vector project_gradient(const RescaledProblem& problem, const Vector& x, const Vector& g_z) {
  Vector g_x = problem.transform.transpose() * g_z;
  bool any = false;
  for (int i = 0; i < problem.active_count(); ++i) {
    int k = problem.active_dims[i];
    double tol = 1e-12 * problem.domain.width(k);
    bool at_lower = x[k] <= problem.domain.lower[k] + tol;
    bool at_upper = x[k] >= problem.domain.upper[k] - tol;
    if ((at_lower && g_x[i] > 0.0) || (at_upper && g_x[i] < 0.0)) {
      g_x[i] = 0.0;
      any = true;
    }
  }
  if (!any) return g_z;
  return problem.transform.transpose().inverse() * g_x;
}

}  // namespace

LocalResult bfgs_minimize(const std::function<double(const Vector&)>& objective,
                          const RescaledProblem& problem, const Vector& x0, double grad_tol,
                          int max_evals, const LocalTraceCallback& on_iteration) {
  const int d = problem.active_count();
  LocalResult res;
  res.x_final = problem.domain.clamp(x0);
  res.grad_norm = std::numeric_limits<double>::infinity();
  if (max_evals <= 0) {
    res.y_final = std::numeric_limits<double>::quiet_NaN();
    res.diagnostic = "zero evaluation budget";
    return res;
  }

  Evaluator ev{objective, problem, max_evals};
  Vector z = problem.to_z(res.x_final);
  double f = ev.value(z);
  if (ev.non_finite) {
    res.y_final = f;
    res.diagnostic = "objective returned a non-finite value";
    res.n_evals = ev.n_evals;
    return res;
  }
  Vector g(d);
  if (!ev.gradient(z, &g)) {
    res.y_final = f;
    res.n_evals = ev.n_evals;
    res.diagnostic = ev.non_finite ? "objective returned a non-finite value"
                                   : "budget exhausted before first gradient";
    return res;
  }
  g = project_gradient(problem, problem.domain.clamp(problem.to_x(z)), g);

  Matrix h_inv = Matrix::Identity(d, d);
  constexpr double c1 = 1e-4;
  constexpr double c2 = 0.9;

  auto finish = [&](bool converged, const char* note) {
    res.x_final = problem.domain.clamp(problem.to_x(z));
    res.y_final = f;
    res.n_evals = ev.n_evals;
    res.grad_norm = g.norm();
    res.converged = converged && res.grad_norm < grad_tol;
    if (note) res.diagnostic = note;
    return res;
  };

  for (;;) {
    if (g.norm() < grad_tol) return finish(true, nullptr);
    if (ev.n_evals >= max_evals) return finish(false, "evaluation budget exhausted");

    Vector p = -(h_inv * g);
    if (p.dot(g) >= 0.0) {  // safeguard: reset to steepest descent
      h_inv = Matrix::Identity(d, d);
      p = -g;
    }
    // Freeze boundary dimensions the step would violate.
    {
      Vector x_cur = problem.domain.clamp(problem.to_x(z));
      Vector dx = problem.inverse * p;
      bool changed = false;
      for (int i = 0; i < d; ++i) {
        int k = problem.active_dims[i];
        double tol = 1e-12 * problem.domain.width(k);
        bool at_lower = x_cur[k] <= problem.domain.lower[k] + tol;
        bool at_upper = x_cur[k] >= problem.domain.upper[k] - tol;
        if ((at_lower && dx[i] < 0.0) || (at_upper && dx[i] > 0.0)) {
          dx[i] = 0.0;
          changed = true;
        }
      }
      if (changed) {
        p = problem.transform * dx;
        if (p.norm() == 0.0) return finish(false, "all descent directions blocked by the box");
      }
    }

    double dphi0 = g.dot(p);
    if (dphi0 >= 0.0) return finish(false, "no descent direction");

    // Strong Wolfe line search (bracket + zoom).
    double t_prev = 0.0, phi_prev = f;
    double t = 1.0;
    double t_accept = -1.0, phi_accept = 0.0;
    Vector g_accept;
    double lo = 0.0, hi = -1.0, phi_lo = f;  // zoom bracket
    bool bracketed = false;

    for (int ls_iter = 0; ls_iter < 12 && !bracketed && t_accept < 0.0; ++ls_iter) {
      double phi_t = ev.value(z + t * p);
      if (ev.budget_hit || ev.non_finite) break;
      if (phi_t > f + c1 * t * dphi0 || (ls_iter > 0 && phi_t >= phi_prev)) {
        lo = t_prev;
        phi_lo = phi_prev;
        hi = t;
        bracketed = true;
        break;
      }
      Vector g_t;
      if (!ev.gradient(z + t * p, &g_t)) break;
      double dphi_t = g_t.dot(p);
      if (std::abs(dphi_t) <= -c2 * dphi0) {
        t_accept = t;
        phi_accept = phi_t;
        g_accept = g_t;
        break;
      }
      if (dphi_t >= 0.0) {
        lo = t;
        phi_lo = phi_t;
        hi = t_prev;
        bracketed = true;
        break;
      }
      t_prev = t;
      phi_prev = phi_t;
      t = 2.0 * t;
    }

    if (bracketed) {
      for (int zi = 0; zi < 10 && t_accept < 0.0; ++zi) {
        double tm = 0.5 * (lo + hi);
        double phi_m = ev.value(z + tm * p);
        if (ev.budget_hit || ev.non_finite) break;
        if (phi_m > f + c1 * tm * dphi0 || phi_m >= phi_lo) {
          hi = tm;
          continue;
        }
        Vector g_m;
        if (!ev.gradient(z + tm * p, &g_m)) break;
        double dphi_m = g_m.dot(p);
        if (std::abs(dphi_m) <= -c2 * dphi0) {
          t_accept = tm;
          phi_accept = phi_m;
          g_accept = g_m;
          break;
        }
        if (dphi_m * (hi - lo) >= 0.0) hi = lo;
        lo = tm;
        phi_lo = phi_m;
      }
      // Fall back to the sufficient-decrease point if curvature never held.
      if (t_accept < 0.0 && !ev.non_finite && lo > 0.0 && phi_lo < f) {
        t_accept = lo;
        phi_accept = phi_lo;
        if (!ev.gradient(z + lo * p, &g_accept)) t_accept = -1.0;
      }
    }

    if (ev.non_finite) return finish(false, "objective returned a non-finite value");
    if (t_accept < 0.0) {
      if (ev.budget_hit) return finish(false, "evaluation budget exhausted");
      return finish(false, "line search failed to make progress");
    }

    Vector z_new = z + t_accept * p;
    Vector g_new = project_gradient(problem, problem.domain.clamp(problem.to_x(z_new)), g_accept);
    Vector step = z_new - z;
    Vector dg = g_new - g;
    double sy = step.dot(dg);
    if (sy > 1e-12 * step.norm() * dg.norm()) {
      double rho = 1.0 / sy;
      Matrix eye = Matrix::Identity(d, d);
      Matrix left = eye - rho * step * dg.transpose();
      h_inv = left * h_inv * left.transpose() + rho * step * step.transpose();
    }
    z = z_new;
    f = phi_accept;
    g = g_new;
    ++res.n_line_searches;
    if (on_iteration)
      on_iteration(problem.domain.clamp(problem.to_x(z)), f, g.norm(), ev.n_evals);
  }
}

RescaledProblem build_rescaling(const GpModel& model, const Vector& x_hat, const Domain& domain) {
  HessianBelief belief = model.infer_hessian(x_hat, domain);
  return RescaledProblem::from_hessian(belief.mean, x_hat, domain, belief.active_dims);
}

}  // namespace blossom
