#include "rankdte/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rankdte/effects.hpp"
#include "rankdte/mathutil.hpp"
#include "rankdte/parallel.hpp"
#include "rankdte/rng.hpp"

namespace rankdte::robust {

namespace {

struct GroupView {
  DesignMatrix design;
  Vec y_t, y_tm1;
};

GroupView group_view(const Panel& panel, int treated) {
  const auto idx =
      treated ? panel.treated_indices() : panel.untreated_indices();
  GroupView g;
  const auto m = static_cast<Eigen::Index>(idx.size());
  Mat covs(m, panel.covariates.cols());
  g.y_t.resize(m);
  g.y_tm1.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::Index r = idx[static_cast<std::size_t>(i)];
    covs.row(i) = panel.covariates.row(r);
    g.y_t[i] = panel.y_t[r];
    g.y_tm1[i] = panel.y_tm1[r];
  }
  g.design = DesignMatrix::with_intercept(covs, panel.covariate_names);
  return g;
}

std::vector<double> to_std(const Vec& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

// Model-implied conditional CDF over the evaluation outcomes, one column
// per data row.
Mat model_cdf_matrix(const Mat& data_X, const qr::QuantileProcess& proc,
                     const std::vector<double>& eval_y) {
  const auto n = data_X.rows();
  const auto ney = static_cast<Eigen::Index>(eval_y.size());
  Mat F(ney, n);
  par::for_each_index(n, [&](std::int64_t k) {
    const Vec curve = proc.monotone_curve(data_X.row(k).transpose());
    for (Eigen::Index j = 0; j < ney; ++j)
      F(j, static_cast<Eigen::Index>(k)) =
          qr::curve_cdf(proc.tau_grid, curve, eval_y[static_cast<std::size_t>(j)]);
  });
  return F;
}

// Marked empirical process R(j,i) = n^-1 sum_k A(j,k) 1{x_k <= x_i}.  With
// at most one non-intercept regressor the indicator weight is an interval
// in the x-order, so prefix sums replace the matrix product.
Mat marked_process(const Mat& data_X, const Vec& data_y,
                   const qr::QuantileProcess& proc,
                   const std::vector<double>& eval_y, const Mat& eval_x) {
  const auto n = data_X.rows();
  const auto p = data_X.cols();
  const auto ney = static_cast<Eigen::Index>(eval_y.size());
  const auto nex = eval_x.rows();
  const Mat F = model_cdf_matrix(data_X, proc, eval_y);
  Mat R(ney, nex);

  if (p <= 2) {
    auto xval = [&](const auto& row) { return p == 2 ? row[1] : 0.0; };
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      return xval(data_X.row(a)) < xval(data_X.row(b));
    });
    std::vector<double> sorted_vals(static_cast<std::size_t>(n));
    for (std::size_t q = 0; q < order.size(); ++q)
      sorted_vals[q] = xval(data_X.row(order[q]));
    std::vector<Eigen::Index> pos(static_cast<std::size_t>(nex));
    for (Eigen::Index i = 0; i < nex; ++i)
      pos[static_cast<std::size_t>(i)] =
          std::upper_bound(sorted_vals.begin(), sorted_vals.end(),
                           xval(eval_x.row(i))) -
          sorted_vals.begin();
    par::for_each_index(ney, [&](std::int64_t j) {
      std::vector<double> prefix(static_cast<std::size_t>(n) + 1, 0.0);
      const double yj = eval_y[static_cast<std::size_t>(j)];
      for (std::size_t q = 0; q < order.size(); ++q) {
        const Eigen::Index k = order[q];
        const double a =
            (data_y[k] <= yj ? 1.0 : 0.0) - F(static_cast<Eigen::Index>(j), k);
        prefix[q + 1] = prefix[q] + a;
      }
      for (Eigen::Index i = 0; i < nex; ++i)
        R(static_cast<Eigen::Index>(j), i) =
            prefix[static_cast<std::size_t>(pos[static_cast<std::size_t>(i)])] /
            static_cast<double>(n);
    });
    return R;
  }

  Mat A(ney, n);
  for (Eigen::Index j = 0; j < ney; ++j) {
    const double yj = eval_y[static_cast<std::size_t>(j)];
    for (Eigen::Index k = 0; k < n; ++k)
      A(j, k) = (data_y[k] <= yj ? 1.0 : 0.0) - F(j, k);
  }
  Mat W(n, nex);
  par::for_each_index(n, [&](std::int64_t k) {
    for (Eigen::Index i = 0; i < nex; ++i)
      W(static_cast<Eigen::Index>(k), i) =
          (data_X.row(static_cast<Eigen::Index>(k)).array() <=
           eval_x.row(i).array())
                  .all()
              ? 1.0
              : 0.0;
  });
  R.noalias() = A * W / static_cast<double>(n);
  return R;
}

std::vector<Eigen::Index> sample_without_replacement(Eigen::Index n,
                                                     Eigen::Index k,
                                                     rng::Stream& stream) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto j =
        i + static_cast<Eigen::Index>(stream.uniform_int(
                static_cast<std::uint64_t>(n - i)));
    std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
  }
  idx.resize(static_cast<std::size_t>(k));
  return idx;
}

}  // namespace

double spearman_rho(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw std::invalid_argument("spearman_rho: equal lengths >= 2 required");
  return pearson_correlation(mid_ranks(a), mid_ranks(b));
}

PlaceboHeterogeneity placebo_heterogeneity(const Panel& panel,
                                           const PlaceboOptions& opts) {
  cf::Algorithm1Options a1opts;
  a1opts.tau_grid = opts.tau_grid;
  a1opts.fit = opts.fit;
  const auto fit = cf::algorithm1(panel, a1opts);

  PlaceboHeterogeneity out;
  for (const auto& pair : fit.pairs)
    out.effects_treated.push_back(pair.y1 - pair.y0_hat);

  // Untreated placebo: impute this period's outcome at the unit's own
  // period-(t-1) conditional rank, all processes fit on untreated data.
  const GroupView untreated = group_view(panel, 0);
  const auto proc_tm1 = qr::rearrange(
      qr::fit_process(untreated.design, untreated.y_tm1, opts.tau_grid, opts.fit));
  const auto proc_t = qr::rearrange(
      qr::fit_process(untreated.design, untreated.y_t, opts.tau_grid, opts.fit));
  const auto n0 = untreated.design.n();
  out.effects_untreated.resize(static_cast<std::size_t>(n0));
  par::for_each_index(n0, [&](std::int64_t i) {
    const Vec x = untreated.design.rows.row(i).transpose();
    const double rank =
        qr::curve_cdf(opts.tau_grid, proc_tm1.monotone_curve(x), untreated.y_tm1[i]);
    const double imputed =
        qr::curve_quantile(opts.tau_grid, proc_t.monotone_curve(x), rank);
    out.effects_untreated[static_cast<std::size_t>(i)] = untreated.y_t[i] - imputed;
  });

  out.sd_effect_treated = sd_of(out.effects_treated);
  out.sd_effect_untreated = sd_of(out.effects_untreated);

  const GroupView treated = group_view(panel, 1);
  out.spearman_treated = spearman_rho(to_std(treated.y_tm1), to_std(treated.y_t));
  out.spearman_untreated =
      spearman_rho(to_std(untreated.y_tm1), to_std(untreated.y_t));

  const double mu_t = mean_of(out.effects_treated);
  const double mu_u = mean_of(out.effects_untreated);
  std::vector<double> dev_t, dev_u, pooled;
  for (double e : out.effects_treated) dev_t.push_back(std::abs(e - mu_t));
  for (double e : out.effects_untreated) dev_u.push_back(std::abs(e - mu_u));
  pooled = dev_t;
  pooled.insert(pooled.end(), dev_u.begin(), dev_u.end());
  const Vec support = make_support(pooled, opts.support_points);
  out.heterogeneity_treated = empirical_cdf(dev_t, support);
  out.heterogeneity_untreated = empirical_cdf(dev_u, support);
  return out;
}

RtmResult rtm_placebo(const Panel& panel, const RtmOptions& opts) {
  panel.validate();
  if (opts.R < 1) throw std::invalid_argument("rtm_placebo: R must be >= 1");
  const Panel pool = panel.subset(panel.untreated_indices());
  const auto n0 = pool.n();
  const auto p = pool.covariates.cols() + 1;
  if (opts.n_pseudo_treated < 1)
    throw std::invalid_argument("rtm_placebo: n_pseudo_treated must be >= 1");
  if (n0 < opts.n_pseudo_treated + p + 1)
    throw EmptyGroupError(
        "untreated pool too small for the requested pseudo-treated count");

  const std::vector<double> taus = opts.second_stage_taus.empty()
                                       ? eff::reporting_tau_grid()
                                       : opts.second_stage_taus;
  const auto T = static_cast<Eigen::Index>(taus.size());

  Mat qr_slopes(opts.R, T);
  Vec ols_slopes(opts.R);
  std::vector<char> ok(static_cast<std::size_t>(opts.R), 0);
  std::vector<std::string> errors(static_cast<std::size_t>(opts.R));

  cf::Algorithm1Options a1opts;
  a1opts.tau_grid = opts.first_stage_grid;
  a1opts.fit = opts.fit;
  eff::EffectsOptions effopts;
  effopts.fit = opts.fit;

  par::for_each_index(opts.R, [&](std::int64_t r) {
    rng::Stream stream(opts.seed, static_cast<std::uint64_t>(r) + 1);
    try {
      const auto chosen = sample_without_replacement(
          n0, opts.n_pseudo_treated, stream);
      Panel pseudo = pool;
      for (Eigen::Index i : chosen)
        pseudo.treated[static_cast<std::size_t>(i)] = 1;
      const auto fit = cf::algorithm1(pseudo, a1opts);
      const EffectSample sample =
          to_effect_sample(fit.pairs, pseudo.covariate_names);
      const auto curves = eff::qr_effects_on_y0(sample, taus, effopts);
      qr_slopes.row(static_cast<Eigen::Index>(r)) =
          curves.coefficients.col(1).transpose();
      ols_slopes[static_cast<Eigen::Index>(r)] = curves.ols_coefficients[1];
      ok[static_cast<std::size_t>(r)] = 1;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(r)] = e.what();
    }
  });

  Eigen::Index n_ok = 0;
  for (char c : ok) n_ok += c;
  RtmResult out;
  out.taus = taus;
  out.n_failed = opts.R - static_cast<int>(n_ok);
  if (out.n_failed > opts.max_failure_share * opts.R) {
    std::string first;
    for (std::size_t r = 0; r < errors.size(); ++r)
      if (!ok[r]) {
        first = errors[r];
        break;
      }
    throw ReplicateFailureError(std::to_string(out.n_failed) + " of " +
                                std::to_string(opts.R) +
                                " placebo replicates failed; first: " + first);
  }
  out.qr_slopes.resize(n_ok, T);
  out.ols_slopes.resize(n_ok);
  Eigen::Index w = 0;
  for (Eigen::Index r = 0; r < opts.R; ++r) {
    if (!ok[static_cast<std::size_t>(r)]) continue;
    out.qr_slopes.row(w) = qr_slopes.row(r);
    out.ols_slopes[w] = ols_slopes[r];
    ++w;
  }

  out.mean_qr_slope.resize(T);
  out.p05_qr_slope.resize(T);
  out.p95_qr_slope.resize(T);
  std::vector<double> col(static_cast<std::size_t>(n_ok));
  for (Eigen::Index t = 0; t < T; ++t) {
    for (Eigen::Index r = 0; r < n_ok; ++r)
      col[static_cast<std::size_t>(r)] = out.qr_slopes(r, t);
    std::sort(col.begin(), col.end());
    out.mean_qr_slope[t] = mean_of(col);
    out.p05_qr_slope[t] = quantile_sorted(col, 0.05);
    out.p95_qr_slope[t] = quantile_sorted(col, 0.95);
  }
  std::vector<double> olsv(out.ols_slopes.data(), out.ols_slopes.data() + n_ok);
  std::sort(olsv.begin(), olsv.end());
  out.mean_ols_slope = mean_of(olsv);
  out.p05_ols_slope = quantile_sorted(olsv, 0.05);
  out.p95_ols_slope = quantile_sorted(olsv, 0.95);
  return out;
}

RotheWiedResult rothe_wied_test(const DesignMatrix& X, const Vec& y,
                                const RotheWiedOptions& opts) {
  X.validate();
  if (y.size() != X.n()) throw std::invalid_argument("y length != design rows");
  if (opts.B < 1) throw std::invalid_argument("rothe_wied_test: B must be >= 1");

  RotheWiedResult out;
  if (opts.B < 50)
    out.warnings.push_back("InsufficientBootstrap: B=" + std::to_string(opts.B) +
                           " gives a coarse p-value");

  const auto n = X.n();
  std::vector<double> eval_y;
  Mat eval_x;
  if (n <= opts.max_eval_n) {
    eval_y = to_std(y);
    eval_x = X.rows;
  } else {
    rng::Stream stream(opts.seed, 0);
    const auto ny = sample_without_replacement(n, opts.max_eval_n, stream);
    const auto nx = sample_without_replacement(n, opts.max_eval_n, stream);
    for (Eigen::Index i : ny) eval_y.push_back(y[i]);
    eval_x.resize(opts.max_eval_n, X.p());
    for (Eigen::Index i = 0; i < eval_x.rows(); ++i)
      eval_x.row(i) = X.rows.row(nx[static_cast<std::size_t>(i)]);
  }
  std::sort(eval_y.begin(), eval_y.end());

  const auto proc =
      qr::rearrange(qr::fit_process(X, y, opts.tau_grid, opts.fit));
  const Mat R0 = marked_process(X.rows, y, proc, eval_y, eval_x);
  out.statistic = R0.squaredNorm();

  Vec boot(opts.B);
  std::vector<char> ok(static_cast<std::size_t>(opts.B), 0);
  std::vector<std::string> errors(static_cast<std::size_t>(opts.B));
  par::for_each_index(opts.B, [&](std::int64_t b) {
    rng::Stream stream(opts.seed, static_cast<std::uint64_t>(b) + 1);
    try {
      Mat Xb(n, X.p());
      Vec yb(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto k = static_cast<Eigen::Index>(
            stream.uniform_int(static_cast<std::uint64_t>(n)));
        Xb.row(i) = X.rows.row(k);
        yb[i] = y[k];
      }
      DesignMatrix Db;
      Db.rows = Xb;
      Db.column_names = X.column_names;
      const auto procb =
          qr::rearrange(qr::fit_process(Db, yb, opts.tau_grid, opts.fit));
      const Mat Rb = marked_process(Xb, yb, procb, eval_y, eval_x);
      boot[static_cast<Eigen::Index>(b)] = (Rb - R0).squaredNorm();
      ok[static_cast<std::size_t>(b)] = 1;
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(b)] = e.what();
    }
  });

  Eigen::Index n_ok = 0;
  for (char c : ok) n_ok += c;
  const int n_failed = opts.B - static_cast<int>(n_ok);
  if (n_ok == 0 || n_failed > opts.max_failure_share * opts.B) {
    std::string first;
    for (std::size_t b = 0; b < errors.size(); ++b)
      if (!ok[b]) {
        first = errors[b];
        break;
      }
    throw ReplicateFailureError(std::to_string(n_failed) + " of " +
                                std::to_string(opts.B) +
                                " test bootstrap replicates failed; first: " +
                                first);
  }
  if (n_failed > 0)
    out.warnings.push_back(std::to_string(n_failed) +
                           " bootstrap replicate(s) failed and were skipped");

  int exceed = 0;
  for (Eigen::Index b = 0; b < opts.B; ++b) {
    if (!ok[static_cast<std::size_t>(b)]) continue;
    out.boot_stats.push_back(boot[b]);
    if (boot[b] >= out.statistic) ++exceed;
  }
  out.p_value = static_cast<double>(exceed) / static_cast<double>(n_ok);
  return out;
}

}  // namespace rankdte::robust
