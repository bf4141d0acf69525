#include "rankdte/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace rankdte {

void DesignMatrix::validate() const {
  if (rows.rows() < rows.cols())
    throw std::invalid_argument("design: fewer rows than columns");
  if (rows.cols() == 0) throw std::invalid_argument("design: no columns");
  if (static_cast<std::size_t>(rows.cols()) != column_names.size())
    throw std::invalid_argument("design: column name count mismatch");
  if ((rows.col(0).array() != 1.0).any())
    throw std::invalid_argument("design: first column must be constant 1");
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    if (rows.col(j).cwiseAbs().maxCoeff() == 0.0)
      throw std::invalid_argument("design: column '" + column_names[j] +
                                  "' is all zero");
  }
}

DesignMatrix DesignMatrix::with_intercept(
    const Mat& covariates, const std::vector<std::string>& names) {
  DesignMatrix d;
  d.rows.resize(covariates.rows(), covariates.cols() + 1);
  d.rows.col(0).setOnes();
  d.rows.rightCols(covariates.cols()) = covariates;
  d.column_names.reserve(names.size() + 1);
  d.column_names.push_back("(intercept)");
  d.column_names.insert(d.column_names.end(), names.begin(), names.end());
  return d;
}

std::vector<Eigen::Index> Panel::treated_indices() const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n(); ++i)
    if (treated[static_cast<std::size_t>(i)] == 1) idx.push_back(i);
  return idx;
}

std::vector<Eigen::Index> Panel::untreated_indices() const {
  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < n(); ++i)
    if (treated[static_cast<std::size_t>(i)] == 0) idx.push_back(i);
  return idx;
}

Panel Panel::subset(const std::vector<Eigen::Index>& idx) const {
  Panel out;
  const auto m = static_cast<Eigen::Index>(idx.size());
  out.unit_ids.reserve(idx.size());
  out.treated.reserve(idx.size());
  out.y_t.resize(m);
  out.y_tm1.resize(m);
  out.covariates.resize(m, covariates.cols());
  out.covariate_names = covariate_names;
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::Index i = idx[static_cast<std::size_t>(k)];
    out.unit_ids.push_back(unit_ids[static_cast<std::size_t>(i)]);
    out.treated.push_back(treated[static_cast<std::size_t>(i)]);
    out.y_t[k] = y_t[i];
    out.y_tm1[k] = y_tm1[i];
    out.covariates.row(k) = covariates.row(i);
  }
  return out;
}

void Panel::validate() const {
  const auto m = n();
  if (m == 0) throw std::invalid_argument("panel: empty");
  if (y_tm1.size() != m || covariates.rows() != m ||
      static_cast<Eigen::Index>(treated.size()) != m ||
      static_cast<Eigen::Index>(unit_ids.size()) != m)
    throw std::invalid_argument("panel: field lengths disagree");
  if (static_cast<std::size_t>(covariates.cols()) != covariate_names.size())
    throw std::invalid_argument("panel: covariate name count mismatch");
  for (int d : treated)
    if (d != 0 && d != 1)
      throw std::invalid_argument("panel: treated must be 0 or 1");
  for (Eigen::Index i = 0; i < m; ++i)
    if (!std::isfinite(y_t[i]) || !std::isfinite(y_tm1[i]))
      throw std::invalid_argument("panel: non-finite outcome");
}

void DistributionCurve::validate() const {
  if (support.size() != cdf.size() || support.size() == 0)
    throw std::invalid_argument("distribution curve: bad sizes");
  for (Eigen::Index i = 1; i < support.size(); ++i) {
    if (!(support[i] > support[i - 1]))
      throw std::invalid_argument("distribution curve: support not increasing");
    if (cdf[i] < cdf[i - 1] - 1e-12)
      throw std::invalid_argument("distribution curve: cdf decreasing");
  }
  if (cdf[0] < -1e-12 || cdf[cdf.size() - 1] > 1.0 + 1e-12)
    throw std::invalid_argument("distribution curve: cdf out of [0,1]");
}

double DistributionCurve::quantile(double tau) const {
  for (Eigen::Index i = 0; i < support.size(); ++i)
    if (cdf[i] >= tau) return support[i];
  return support[support.size() - 1];
}

double DistributionCurve::evaluate(double y) const {
  if (y < support[0]) return 0.0;
  Eigen::Index lo = 0, hi = support.size() - 1;
  while (lo < hi) {  // largest index with support <= y
    const Eigen::Index mid = (lo + hi + 1) / 2;
    if (support[mid] <= y)
      lo = mid;
    else
      hi = mid - 1;
  }
  return cdf[lo];
}

DistributionCurve empirical_cdf(const std::vector<double>& values,
                                const Vec& support) {
  std::vector<double> sorted(values);
  std::sort(sorted.begin(), sorted.end());
  DistributionCurve curve;
  curve.support = support;
  curve.cdf.resize(support.size());
  const double n = static_cast<double>(sorted.size());
  for (Eigen::Index j = 0; j < support.size(); ++j) {
    const auto it =
        std::upper_bound(sorted.begin(), sorted.end(), support[j]);
    curve.cdf[j] = static_cast<double>(it - sorted.begin()) / n;
  }
  return curve;
}

Vec linspace(double lo, double hi, int n) {
  Vec v(n);
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) v[i] = lo + step * i;
  v[n - 1] = hi;
  return v;
}

Vec make_support(const std::vector<double>& values, int n_points) {
  if (values.empty()) throw std::invalid_argument("make_support: no values");
  const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
  double lo = *mn_it, hi = *mx_it;
  if (lo == hi) {  // degenerate sample: widen slightly for a usable grid
    lo -= 0.5;
    hi += 0.5;
  }
  std::set<double> pts;
  const Vec base = linspace(lo, hi, n_points);
  for (Eigen::Index i = 0; i < base.size(); ++i) pts.insert(base[i]);
  if (lo < 0.0 && hi > 0.0) pts.insert(0.0);
  Vec out(static_cast<Eigen::Index>(pts.size()));
  Eigen::Index k = 0;
  for (double v : pts) out[k++] = v;
  return out;
}

void EffectSample::validate() const {
  if (deltas.size() == 0) throw std::invalid_argument("effect sample: empty");
  if (covariates.rows() != deltas.size() || y0_hat.size() != deltas.size())
    throw std::invalid_argument("effect sample: field lengths disagree");
  for (Eigen::Index i = 0; i < deltas.size(); ++i)
    if (!std::isfinite(deltas[i]))
      throw std::invalid_argument("effect sample: non-finite delta");
}

EffectSample to_effect_sample(const std::vector<ImputedPair>& pairs,
                              const std::vector<std::string>& covariate_names) {
  EffectSample s;
  const auto m = static_cast<Eigen::Index>(pairs.size());
  const Eigen::Index k = pairs.empty() ? 0 : pairs.front().covariates.size();
  s.deltas.resize(m);
  s.y0_hat.resize(m);
  s.covariates.resize(m, k);
  s.covariate_names = covariate_names;
  for (Eigen::Index i = 0; i < m; ++i) {
    const auto& pr = pairs[static_cast<std::size_t>(i)];
    s.deltas[i] = pr.y1 - pr.y0_hat;
    s.y0_hat[i] = pr.y0_hat;
    s.covariates.row(i) = pr.covariates.transpose();
  }
  return s;
}

}  // namespace rankdte
