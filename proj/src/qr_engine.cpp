#include "rankdte/qr_engine.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "rankdte/parallel.hpp"

namespace rankdte::qr {

namespace {

void check_tau(double tau) {
  if (!(tau > 0.0 && tau < 1.0))
    throw std::invalid_argument("tau must lie strictly inside (0,1)");
}

void check_rank(const Mat& X, double rank_tol) {
  Eigen::JacobiSVD<Mat> svd(X);
  const auto& s = svd.singularValues();
  if (s.size() == 0 || s[s.size() - 1] < rank_tol * s[0])
    throw RankDeficientError(
        "design matrix is numerically rank deficient (sigma_min/sigma_max < " +
        std::to_string(rank_tol) + ")");
}

// Normalized subgradient certificate.  `dual` holds a subgradient selection
// d_i of the total pinball loss; each column score is |sum_i X_ij d_i|
// scaled by sum_i |X_ij|, so the value is dimensionless in both X and y.
double kkt_certificate(const Mat& X, const Vec& dual) {
  double worst = 0.0;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double colsum = X.col(j).cwiseAbs().sum();
    const double g = std::abs(X.col(j).dot(dual));
    worst = std::max(worst, g / std::max(colsum, 1e-300));
  }
  return worst;
}

struct IrlsResult {
  Vec beta;
  bool converged = false;
};

// Smoothed pinball minimization: rho_tau(r) = |r|/2 + (tau - 1/2) r, with
// |r| majorized by r^2/(2e) + e/2 at e = max(|r|, eps).  Each step solves
// the weighted least squares system
//   (X' W X) beta = X' W y + (tau - 1/2) X'1,   W = diag(1 / (2 e_i)),
// and eps is driven down over a fixed ladder.  The best iterate under the
// true pinball loss is kept.
IrlsResult irls_fit(const Mat& X, const Vec& y, double tau,
                    const FitOptions& opts) {
  const Eigen::Index n = X.rows();
  const double yscale = std::max(1.0, y.cwiseAbs().maxCoeff());
  const Vec ones_rhs = X.colwise().sum().transpose();

  Vec beta = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  Vec best = beta;
  double best_obj = pinball_loss(y - X * beta, tau);
  {
    const double zero_obj = pinball_loss(y, tau);
    if (zero_obj < best_obj) {
      best = Vec::Zero(X.cols());
      best_obj = zero_obj;
    }
  }

  const double eps_ladder[] = {1e-3, 1e-5, 1e-7, 1e-9};
  const int per_level = std::max(1, opts.irls_max_iter / 4);
  bool converged = false;
  for (double eps_rel : eps_ladder) {
    const double eps = eps_rel * yscale;
    converged = false;
    for (int it = 0; it < per_level; ++it) {
      const Vec r = y - X * beta;
      Vec w(n);
      for (Eigen::Index i = 0; i < n; ++i)
        w[i] = 0.5 / std::max(std::abs(r[i]), eps);
      const Mat Xw = w.asDiagonal() * X;
      const Mat M = X.transpose() * Xw;
      const Vec rhs = Xw.transpose() * y + (tau - 0.5) * ones_rhs;
      const Vec nb = M.ldlt().solve(rhs);
      const double step = (nb - beta).cwiseAbs().maxCoeff();
      beta = nb;
      const double obj = pinball_loss(y - X * beta, tau);
      if (obj < best_obj) {
        best_obj = obj;
        best = beta;
      }
      if (step <= opts.irls_tol * std::max(1.0, beta.cwiseAbs().maxCoeff())) {
        converged = true;
        break;
      }
    }
  }
  return {best, converged};
}

// Exact finite descent over interpolation bases.  A basic solution
// interpolates p observations H; the move keeps p-1 of them interpolated,
// walks the one-dimensional piecewise-linear objective to its weighted
// median breakpoint, and swaps the crossing observation into the basis.
// Terminates at a vertex satisfying the exact subgradient conditions.
struct VertexResult {
  Vec beta;
  bool converged = false;
  std::vector<Eigen::Index> basis;
  Vec basis_dual;  // subgradient entries for basic observations
};

VertexResult vertex_descent(const Mat& X, const Vec& y, double tau,
                            const Vec& warm_start) {
  const Eigen::Index n = X.rows();
  const Eigen::Index p = X.cols();
  const double yscale = std::max(1.0, y.cwiseAbs().maxCoeff());
  const double ztol = 1e-9 * yscale;

  // Crash basis: smallest-|residual| observations with independent rows.
  std::vector<Eigen::Index> order(n);
  for (Eigen::Index i = 0; i < n; ++i) order[i] = i;
  const Vec r0 = y - X * warm_start;
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) {
                     return std::abs(r0[a]) < std::abs(r0[b]);
                   });
  std::vector<Eigen::Index> H;
  Mat basis_q(p, p);  // orthonormalized accepted rows
  Eigen::Index accepted = 0;
  for (Eigen::Index i : order) {
    if (accepted == p) break;
    Vec v = X.row(i).transpose();
    const double nrm_in = v.norm();
    for (Eigen::Index k = 0; k < accepted; ++k)
      v -= basis_q.col(k).dot(v) * basis_q.col(k);
    if (v.norm() > 1e-8 * std::max(nrm_in, 1.0)) {
      basis_q.col(accepted) = v / v.norm();
      H.push_back(i);
      ++accepted;
    }
  }
  if (accepted < p)
    throw RankDeficientError("could not assemble an interpolation basis");

  auto factor = [&](const std::vector<Eigen::Index>& basis) {
    Mat XH(p, p);
    for (Eigen::Index k = 0; k < p; ++k)
      XH.row(k) = X.row(basis[static_cast<std::size_t>(k)]);
    return Eigen::PartialPivLU<Mat>(XH);
  };
  auto basis_rhs = [&](const std::vector<Eigen::Index>& basis) {
    Vec yH(p);
    for (Eigen::Index k = 0; k < p; ++k)
      yH[k] = y[basis[static_cast<std::size_t>(k)]];
    return yH;
  };

  Eigen::PartialPivLU<Mat> lu = factor(H);
  Vec beta = lu.solve(basis_rhs(H));

  VertexResult out;
  out.beta = beta;
  out.basis = H;
  out.basis_dual = Vec::Zero(p);
  double best_obj = pinball_loss(y - X * beta, tau);

  const int max_pivots = static_cast<int>(50 + 10 * (n + p));
  std::vector<char> in_basis(static_cast<std::size_t>(n), 0);
  for (Eigen::Index h : H) in_basis[static_cast<std::size_t>(h)] = 1;

  for (int pivot = 0; pivot < max_pivots; ++pivot) {
    const Vec r = y - X * beta;
    // Subgradient weights away from the basis.
    Vec v = Vec::Zero(p);
    std::vector<Eigen::Index> zero_set;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)]) continue;
      if (r[i] > ztol)
        v += tau * X.row(i).transpose();
      else if (r[i] < -ztol)
        v += (tau - 1.0) * X.row(i).transpose();
      else
        zero_set.push_back(i);
    }
    const Vec g = lu.transpose().solve(v);
    const Mat delta = lu.inverse();  // column h spans the h-th basis move

    // One-sided directional derivatives for every basic leave candidate.
    double worst = 0.0;
    Eigen::Index worst_h = -1;
    int worst_sign = 1;
    for (Eigen::Index h = 0; h < p; ++h) {
      for (int s : {1, -1}) {
        double D = (s > 0 ? 1.0 - tau : tau) - s * g[h];
        for (Eigen::Index i : zero_set) {
          const double c = s * X.row(i).dot(delta.col(h));
          D += c > 0 ? (1.0 - tau) * c : -tau * c;
        }
        if (D < worst) {
          worst = D;
          worst_h = h;
          worst_sign = s;
        }
      }
    }
    const double opt_tol = 1e-9 * (1.0 + g.cwiseAbs().maxCoeff());
    if (worst >= -opt_tol) {
      out.converged = true;
      // Dual completion for the certificate: a_h = -g_h clipped to the
      // admissible box (clipping only bites in degenerate tie cases).
      for (Eigen::Index h = 0; h < p; ++h)
        out.basis_dual[h] = std::clamp(-g[h], tau - 1.0, tau);
      break;
    }

    // Line search along the chosen basis-leaving direction.
    const Vec dir = worst_sign * delta.col(worst_h);
    const Vec c = X * dir;
    double slope = worst;
    std::vector<std::pair<double, Eigen::Index>> events;
    events.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (in_basis[static_cast<std::size_t>(i)]) continue;
      if (std::abs(r[i]) <= ztol || c[i] == 0.0) continue;
      const double t = r[i] / c[i];
      if (t > 0.0) events.emplace_back(t, i);
    }
    std::sort(events.begin(), events.end());
    Eigen::Index enter = -1;
    for (const auto& [t, i] : events) {
      slope += std::abs(c[i]);
      if (slope >= 0.0) {
        enter = i;  // weighted-median breakpoint; the new interpolant re-solves exactly
        break;
      }
    }
    if (enter < 0) break;  // descent direction unbounded: give up on polish

    const Eigen::Index leave = H[static_cast<std::size_t>(worst_h)];
    in_basis[static_cast<std::size_t>(leave)] = 0;
    in_basis[static_cast<std::size_t>(enter)] = 1;
    H[static_cast<std::size_t>(worst_h)] = enter;
    lu = factor(H);
    beta = lu.solve(basis_rhs(H));
    const double obj = pinball_loss(y - X * beta, tau);
    if (obj < best_obj) {
      best_obj = obj;
      out.beta = beta;
      out.basis = H;
    }
  }
  if (!out.converged) {
    // Keep the best vertex visited; the caller reports the flag.
    return out;
  }
  out.beta = beta;
  out.basis = H;
  return out;
}

PinballFit fit_quantile_impl(const Mat& X, const Vec& y, double tau,
                             const FitOptions& opts) {
  const Eigen::Index n = X.rows();
  PinballFit fit;
  fit.tau = tau;

  const IrlsResult irls = irls_fit(X, y, tau, opts);
  fit.coefficients = irls.beta;
  fit.converged = irls.converged;

  Vec dual = Vec::Zero(n);
  const double ztol = 1e-9 * std::max(1.0, y.cwiseAbs().maxCoeff());
  if (n <= opts.exact_threshold) {
    const VertexResult vr = vertex_descent(X, y, tau, irls.beta);
    fit.coefficients = vr.beta;
    fit.converged = vr.converged;
    const Vec r = y - X * fit.coefficients;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (r[i] > ztol)
        dual[i] = tau;
      else if (r[i] < -ztol)
        dual[i] = tau - 1.0;
    }
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(vr.basis.size());
         ++k)
      dual[vr.basis[static_cast<std::size_t>(k)]] = vr.basis_dual[k];
  } else {
    const Vec r = y - X * fit.coefficients;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (r[i] > ztol)
        dual[i] = tau;
      else if (r[i] < -ztol)
        dual[i] = tau - 1.0;
    }
  }
  fit.objective = pinball_loss(y - X * fit.coefficients, tau);
  fit.kkt_inf = kkt_certificate(X, dual);
  return fit;
}

void check_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw std::invalid_argument("empty tau grid");
  double prev = 0.0;
  for (double t : grid) {
    check_tau(t);
    if (t <= prev) throw std::invalid_argument("tau grid not increasing");
    prev = t;
  }
}

}  // namespace

double pinball_loss(const Vec& residuals, double tau) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < residuals.size(); ++i) {
    const double u = residuals[i];
    total += u * (tau - (u < 0.0 ? 1.0 : 0.0));
  }
  return total / static_cast<double>(residuals.size());
}

std::vector<double> default_tau_grid() {
  std::vector<double> grid(99);
  for (int i = 1; i <= 99; ++i) grid[static_cast<std::size_t>(i - 1)] = i / 100.0;
  return grid;
}

PinballFit fit_quantile(const DesignMatrix& X, const Vec& y, double tau,
                        const FitOptions& opts) {
  X.validate();
  check_tau(tau);
  if (y.size() != X.n()) throw std::invalid_argument("y length != design rows");
  check_rank(X.rows, opts.rank_tol);
  return fit_quantile_impl(X.rows, y, tau, opts);
}

QuantileProcess fit_process(const DesignMatrix& X, const Vec& y,
                            const std::vector<double>& tau_grid,
                            const FitOptions& opts) {
  X.validate();
  check_grid(tau_grid);
  if (y.size() != X.n()) throw std::invalid_argument("y length != design rows");
  check_rank(X.rows, opts.rank_tol);

  QuantileProcess proc;
  proc.tau_grid = tau_grid;
  proc.coefficients.resize(static_cast<Eigen::Index>(tau_grid.size()), X.p());
  proc.rearranged = false;

  const auto m = static_cast<std::int64_t>(tau_grid.size());
  std::vector<std::string> failures(static_cast<std::size_t>(m));
  par::for_each_index(m, [&](std::int64_t k) {
    try {
      const PinballFit fit = fit_quantile_impl(
          X.rows, y, tau_grid[static_cast<std::size_t>(k)], opts);
      proc.coefficients.row(static_cast<Eigen::Index>(k)) =
          fit.coefficients.transpose();
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(k)] = e.what();
    }
  });
  for (std::size_t k = 0; k < failures.size(); ++k) {
    if (!failures[k].empty())
      throw Error("FitFailed", "fit_process failed at tau=" +
                                   std::to_string(tau_grid[k]) + ": " +
                                   failures[k]);
  }
  return proc;
}

Vec QuantileProcess::raw_curve(const Vec& x) const {
  return coefficients * x;
}

Vec QuantileProcess::monotone_curve(const Vec& x) const {
  Vec curve = coefficients * x;
  if (rearranged) std::sort(curve.data(), curve.data() + curve.size());
  return curve;
}

QuantileProcess rearrange(const QuantileProcess& proc,
                          const std::vector<Vec>& anchors) {
  if (proc.rearranged)
    throw std::invalid_argument("process already rearranged");
  QuantileProcess out = proc;
  out.rearranged = true;
  for (const Vec& x : anchors) {
    const Vec curve = out.monotone_curve(x);
    for (Eigen::Index k = 1; k < curve.size(); ++k)
      if (curve[k] < curve[k - 1])
        throw Error("Internal", "rearranged curve not monotone");
  }
  return out;
}

double curve_quantile(const std::vector<double>& tau_grid, const Vec& curve,
                      double tau) {
  const auto m = static_cast<Eigen::Index>(tau_grid.size());
  if (tau <= tau_grid.front()) return curve[0];
  if (tau >= tau_grid.back()) return curve[m - 1];
  const auto it = std::upper_bound(tau_grid.begin(), tau_grid.end(), tau);
  const auto k = static_cast<Eigen::Index>(it - tau_grid.begin()) - 1;
  const double t0 = tau_grid[static_cast<std::size_t>(k)];
  const double t1 = tau_grid[static_cast<std::size_t>(k) + 1];
  const double frac = (tau - t0) / (t1 - t0);
  return curve[k] + frac * (curve[k + 1] - curve[k]);
}

double curve_cdf(const std::vector<double>& tau_grid, const Vec& curve,
                 double y) {
  const auto m = curve.size();
  if (y < curve[0]) return tau_grid.front();
  if (y >= curve[m - 1]) return tau_grid.back();
  // Largest grid index with prediction <= y; ties resolve rightward.
  const auto it = std::upper_bound(curve.data(), curve.data() + m, y);
  const auto k = static_cast<Eigen::Index>(it - curve.data()) - 1;
  const double q0 = curve[k];
  const double q1 = curve[k + 1];
  const double t0 = tau_grid[static_cast<std::size_t>(k)];
  const double t1 = tau_grid[static_cast<std::size_t>(k) + 1];
  return t0 + (y - q0) / (q1 - q0) * (t1 - t0);
}

double predict_quantile(const QuantileProcess& proc, const Vec& x, double tau) {
  if (!proc.rearranged)
    throw std::logic_error("predict_quantile requires a rearranged process");
  return curve_quantile(proc.tau_grid, proc.monotone_curve(x), tau);
}

double conditional_cdf(const QuantileProcess& proc, const Vec& x, double y) {
  if (!proc.rearranged)
    throw std::logic_error("conditional_cdf requires a rearranged process");
  return curve_cdf(proc.tau_grid, proc.monotone_curve(x), y);
}

Vec fit_ols(const DesignMatrix& X, const Vec& y, double rank_tol) {
  X.validate();
  if (y.size() != X.n()) throw std::invalid_argument("y length != design rows");
  Eigen::JacobiSVD<Mat> svd(X.rows, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (s[s.size() - 1] < rank_tol * s[0])
    throw RankDeficientError("OLS design is numerically rank deficient");
  return svd.solve(y);
}

}  // namespace rankdte::qr
