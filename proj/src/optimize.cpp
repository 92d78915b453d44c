#include "tvgp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace tvgp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const std::function<double(const Eigen::VectorXd&)>& f,
                 const Eigen::VectorXd& x) {
  double v;
  try {
    v = f(x);
  } catch (const std::exception&) {
    return kInf;
  }
  return std::isfinite(v) ? v : kInf;
}

Eigen::VectorXd clamp_box(Eigen::VectorXd x, const Eigen::VectorXd& lo,
                          const Eigen::VectorXd& hi) {
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = std::min(std::max(x[i], lo[i]), hi[i]);
  return x;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                            const Eigen::VectorXd& hi, double rel_step) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double h = rel_step * std::max(1.0, std::abs(x[i]));
    // Keep the stencil inside the box; fall back to one-sided at a bound.
    double a = std::max(x[i] - h, lo[i]);
    double b = std::min(x[i] + h, hi[i]);
    if (b - a < 0.25 * h) {  // degenerate box slice
      g[i] = 0.0;
      continue;
    }
    xp[i] = b;
    const double fb = safe_eval(f, xp);
    xp[i] = a;
    const double fa = safe_eval(f, xp);
    xp[i] = x[i];
    g[i] = (std::isfinite(fa) && std::isfinite(fb)) ? (fb - fa) / (b - a) : 0.0;
  }
  return g;
}

}  // namespace

LbfgsResult minimize_bounded(const std::function<double(const Eigen::VectorXd&)>& f,
                             Eigen::VectorXd x0, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi, const LbfgsOptions& opts) {
  const Eigen::Index d = x0.size();
  if (lo.size() != d || hi.size() != d)
    throw std::invalid_argument("minimize_bounded: bound dimensions do not match x0");
  for (Eigen::Index i = 0; i < d; ++i)
    if (!(lo[i] < hi[i])) throw std::invalid_argument("minimize_bounded: lo must be < hi");

  LbfgsResult res;
  res.x = clamp_box(std::move(x0), lo, hi);
  res.f = safe_eval(f, res.x);
  if (!std::isfinite(res.f)) return res;  // caller decides how to report

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  Eigen::VectorXd g = fd_gradient(f, res.x, lo, hi, opts.fd_step);

  for (int iter = 0; iter < opts.max_iters; ++iter) {
    res.iters = iter + 1;

    // Projected-gradient stationarity test.
    const Eigen::VectorXd pg = res.x - clamp_box(res.x - g, lo, hi);
    if (pg.lpNorm<Eigen::Infinity>() < opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int k = static_cast<int>(s_hist.size()) - 1; k >= 0; --k) {
      alpha[k] = rho_hist[k] * s_hist[k].dot(q);
      q -= alpha[k] * y_hist[k];
    }
    if (!s_hist.empty()) {
      const double gamma =
          s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (size_t k = 0; k < s_hist.size(); ++k) {
      const double beta = rho_hist[k] * y_hist[k].dot(q);
      q += (alpha[k] - beta) * s_hist[k];
    }
    Eigen::VectorXd dir = -q;
    if (dir.dot(g) > -1e-14 * g.norm() * dir.norm()) dir = -g;  // not a descent direction

    // Backtracking line search on projected trial points.
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = res.f;
    for (int ls = 0; ls < opts.max_linesearch; ++ls) {
      x_new = clamp_box(res.x + step * dir, lo, hi);
      const Eigen::VectorXd delta = x_new - res.x;
      if (delta.lpNorm<Eigen::Infinity>() < 1e-16) break;
      f_new = safe_eval(f, x_new);
      if (std::isfinite(f_new) && f_new <= res.f + 1e-4 * g.dot(delta)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // Final fallback: projected steepest descent with tiny steps.
      step = 1e-3;
      for (int ls = 0; ls < opts.max_linesearch && !accepted; ++ls) {
        x_new = clamp_box(res.x - step * g, lo, hi);
        f_new = safe_eval(f, x_new);
        if (std::isfinite(f_new) && f_new < res.f) accepted = true;
        step *= 0.5;
      }
      if (!accepted) {
        res.converged = true;  // no descent available at resolution limits
        break;
      }
    }

    Eigen::VectorXd g_new = fd_gradient(f, x_new, lo, hi, opts.fd_step);
    const Eigen::VectorXd s = x_new - res.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }

    const double f_change = std::abs(res.f - f_new) / std::max(1.0, std::abs(res.f));
    res.x = x_new;
    res.f = f_new;
    g = std::move(g_new);
    if (f_change < opts.f_tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

LbfgsResult multistart_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                                int dim, const FitOptions& opts, OptimizerTrace* trace) {
  if (dim < 1) throw std::invalid_argument("multistart_minimize: dimension must be >= 1");
  if (opts.multistart < 1)
    throw std::invalid_argument("multistart_minimize: need at least one start");

  const double log_lo = std::log(opts.start_lo), log_hi = std::log(opts.start_hi);
  const Eigen::VectorXd lo = Eigen::VectorXd::Constant(dim, std::log(opts.bound_lo));
  const Eigen::VectorXd hi = Eigen::VectorXd::Constant(dim, std::log(opts.bound_hi));

  // Latin-hypercube starts in log space.
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int k = opts.multistart;
  Eigen::MatrixXd starts(k, dim);
  std::vector<int> perm(static_cast<size_t>(k));
  for (int j = 0; j < dim; ++j) {
    for (int i = 0; i < k; ++i) perm[static_cast<size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < k; ++i) {
      const double u = (perm[static_cast<size_t>(i)] + unif(rng)) / k;
      starts(i, j) = log_lo + u * (log_hi - log_lo);
    }
  }

  LbfgsResult best;
  best.f = kInf;
  if (trace) trace->starts.clear();
  for (int i = 0; i < k; ++i) {
    Eigen::VectorXd x0 = starts.row(i);
    const double f0 = safe_eval(f, x0);
    if (!std::isfinite(f0)) {
      std::ostringstream msg;
      msg << "multistart_minimize: non-finite objective at start point (";
      for (int j = 0; j < dim; ++j) msg << (j ? ", " : "") << std::exp(x0[j]);
      msg << ")";
      throw std::runtime_error(msg.str());
    }
    LbfgsResult r = minimize_bounded(f, x0, lo, hi, opts.lbfgs);
    if (trace) {
      StartRecord rec;
      rec.x0 = x0;
      rec.f0 = f0;
      rec.x = r.x;
      rec.f = r.f;
      rec.iters = r.iters;
      rec.converged = r.converged;
      trace->starts.push_back(std::move(rec));
    }
    if (r.f < best.f) {
      best = r;
      if (trace) trace->best_start = i;
    }
  }
  if (!std::isfinite(best.f))
    throw std::runtime_error("multistart_minimize: no start produced a finite objective");
  return best;
}

}  // namespace tvgp
