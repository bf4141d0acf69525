#include "rankdte/dataio.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rankdte/mathutil.hpp"
#include "rankdte/rng.hpp"

namespace rankdte::io {

namespace {

using nlohmann::json;

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else if (c != '\r') {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}

double parse_number(const std::string& s, const std::string& context) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos])))
      ++pos;
    if (pos != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw SchemaMismatchError("cannot parse '" + s + "' as a number in " +
                              context);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

PanelSchema PanelSchema::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw SchemaMismatchError(std::string("schema JSON parse error: ") +
                              e.what());
  }
  PanelSchema s;
  try {
    s.id = j.at("id").get<std::string>();
    s.treated = j.at("treated").get<std::string>();
    s.y_t = j.at("y_t").get<std::string>();
    s.y_tm1 = j.at("y_tm1").get<std::string>();
    s.in_labor_force = j.value("in_labor_force", std::string());
    for (const auto& c : j.at("covariates")) {
      CovariateSpec cs;
      cs.column = c.at("column").get<std::string>();
      cs.categorical = c.value("type", std::string("numeric")) == "categorical";
      cs.reference = c.value("reference", std::string());
      if (cs.categorical && cs.reference.empty())
        throw SchemaMismatchError("categorical covariate '" + cs.column +
                                  "' needs a named reference level");
      s.covariates.push_back(std::move(cs));
    }
  } catch (const json::exception& e) {
    throw SchemaMismatchError(std::string("schema JSON: ") + e.what());
  }
  return s;
}

PanelSchema PanelSchema::from_json_file(const std::string& path) {
  return from_json_text(read_file(path));
}

std::string PanelSchema::to_json_text() const {
  json j;
  j["id"] = id;
  j["treated"] = treated;
  j["y_t"] = y_t;
  j["y_tm1"] = y_tm1;
  if (!in_labor_force.empty()) j["in_labor_force"] = in_labor_force;
  j["covariates"] = json::array();
  for (const auto& c : covariates) {
    json jc;
    jc["column"] = c.column;
    jc["type"] = c.categorical ? "categorical" : "numeric";
    if (c.categorical) jc["reference"] = c.reference;
    j["covariates"].push_back(jc);
  }
  return j.dump(2) + "\n";
}

Panel load_panel(const std::string& path, const PanelSchema& schema,
                 LoadReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaMismatchError("empty CSV: " + path);
  const std::vector<std::string> header = split_csv_line(line);
  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw SchemaMismatchError("column '" + name + "' not found in " + path);
    return static_cast<std::size_t>(it - header.begin());
  };

  const std::size_t id_col = column_of(schema.id);
  const std::size_t d_col = column_of(schema.treated);
  const std::size_t yt_col = column_of(schema.y_t);
  const std::size_t ytm1_col = column_of(schema.y_tm1);
  const bool has_lf = !schema.in_labor_force.empty();
  const std::size_t lf_col = has_lf ? column_of(schema.in_labor_force) : 0;
  std::vector<std::size_t> cov_cols;
  for (const auto& c : schema.covariates) cov_cols.push_back(column_of(c.column));

  struct RawRow {
    std::string id;
    int treated;
    double y_t, y_tm1;
    std::vector<std::string> cov;
  };
  std::vector<RawRow> rows;
  LoadReport rep;

  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw SchemaMismatchError("row " + std::to_string(line_no) + " has " +
                                std::to_string(fields.size()) + " fields, header has " +
                                std::to_string(header.size()));
    ++rep.n_rows_read;
    const std::string ctx = "row " + std::to_string(line_no);
    RawRow row;
    row.id = fields[id_col];
    const double dval = parse_number(fields[d_col], ctx + " treated");
    if (dval != 0.0 && dval != 1.0)
      throw SchemaMismatchError("treated must be 0 or 1 at " + ctx);
    row.treated = static_cast<int>(dval);

    const bool yt_missing = fields[yt_col].empty();
    const bool ytm1_missing = fields[ytm1_col].empty();
    if (row.treated == 0) {
      if (yt_missing || ytm1_missing) {
        ++rep.n_dropped_missing_untreated;
        continue;
      }
      row.y_t = parse_number(fields[yt_col], ctx + " y_t");
      row.y_tm1 = parse_number(fields[ytm1_col], ctx + " y_tm1");
    } else {
      if (has_lf && !fields[lf_col].empty() &&
          parse_number(fields[lf_col], ctx + " in_labor_force") == 0.0) {
        ++rep.n_dropped_not_in_labor_force;
        continue;
      }
      if (ytm1_missing) {
        ++rep.n_dropped_treated_missing_tm1;
        continue;
      }
      row.y_tm1 = parse_number(fields[ytm1_col], ctx + " y_tm1");
      if (yt_missing) {
        row.y_t = 0.0;  // in the labor force, not currently employed
        ++rep.n_zero_coded;
      } else {
        row.y_t = parse_number(fields[yt_col], ctx + " y_t");
      }
    }
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      const std::string& v = fields[cov_cols[c]];
      if (v.empty())
        throw SchemaMismatchError("missing covariate '" +
                                  schema.covariates[c].column + "' at " + ctx);
      row.cov.push_back(v);
    }
    rows.push_back(std::move(row));
  }

  // Categorical levels, deterministic order, reference level excluded.
  std::vector<std::vector<std::string>> levels(schema.covariates.size());
  for (std::size_t c = 0; c < schema.covariates.size(); ++c) {
    if (!schema.covariates[c].categorical) continue;
    std::set<std::string> seen;
    for (const auto& row : rows) seen.insert(row.cov[c]);
    if (!seen.count(schema.covariates[c].reference))
      throw SchemaMismatchError("reference level '" +
                                schema.covariates[c].reference +
                                "' never occurs in column '" +
                                schema.covariates[c].column + "'");
    for (const auto& lv : seen)
      if (lv != schema.covariates[c].reference) levels[c].push_back(lv);
    rep.encodings[schema.covariates[c].column] = levels[c];
  }

  std::vector<std::string> names;
  for (std::size_t c = 0; c < schema.covariates.size(); ++c) {
    if (schema.covariates[c].categorical) {
      for (const auto& lv : levels[c])
        names.push_back(schema.covariates[c].column + "=" + lv);
    } else {
      names.push_back(schema.covariates[c].column);
    }
  }

  Panel panel;
  panel.covariate_names = names;
  const auto n = static_cast<Eigen::Index>(rows.size());
  panel.y_t.resize(n);
  panel.y_tm1.resize(n);
  panel.covariates.resize(n, static_cast<Eigen::Index>(names.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    panel.unit_ids.push_back(row.id);
    panel.treated.push_back(row.treated);
    panel.y_t[i] = row.y_t;
    panel.y_tm1[i] = row.y_tm1;
    Eigen::Index k = 0;
    for (std::size_t c = 0; c < schema.covariates.size(); ++c) {
      if (schema.covariates[c].categorical) {
        for (const auto& lv : levels[c])
          panel.covariates(i, k++) = row.cov[c] == lv ? 1.0 : 0.0;
      } else {
        panel.covariates(i, k++) =
            parse_number(row.cov[c], "covariate " + schema.covariates[c].column);
      }
    }
  }

  if (panel.treated_indices().empty())
    throw EmptyGroupError("no treated rows remain after filtering");
  if (panel.untreated_indices().empty())
    throw EmptyGroupError("no untreated rows remain after filtering");
  panel.validate();
  if (report) *report = rep;
  return panel;
}

void write_panel(const Panel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "id,treated,y_t,y_tm1";
  for (const auto& name : panel.covariate_names) out << "," << name;
  out << "\n";
  for (Eigen::Index i = 0; i < panel.n(); ++i) {
    out << panel.unit_ids[static_cast<std::size_t>(i)] << ","
        << panel.treated[static_cast<std::size_t>(i)] << ","
        << fmt_double(panel.y_t[i]) << "," << fmt_double(panel.y_tm1[i]);
    for (Eigen::Index j = 0; j < panel.covariates.cols(); ++j)
      out << "," << fmt_double(panel.covariates(i, j));
    out << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

// ---------------------------------------------------------------------------

DgpCovariate DgpCovariate::binary(std::string name, double p, double p_treated) {
  DgpCovariate c;
  c.name = std::move(name);
  c.is_binary = true;
  c.p = p;
  c.p_treated = p_treated;
  return c;
}

DgpCovariate DgpCovariate::uniform(std::string name, double lo, double hi) {
  DgpCovariate c;
  c.name = std::move(name);
  c.is_binary = false;
  c.lo = lo;
  c.hi = hi;
  return c;
}

DgpConfig DgpConfig::basic(int n_treated, int n_untreated, std::uint64_t seed) {
  DgpConfig cfg;
  cfg.n_treated = n_treated;
  cfg.n_untreated = n_untreated;
  cfg.seed = seed;
  cfg.covariates = {DgpCovariate::binary("male", 0.5),
                    DgpCovariate::uniform("skill", -1.0, 1.0)};
  cfg.level_a = (Vec(3) << 850.0, 80.0, 100.0).finished();
  cfg.level_b = (Vec(3) << 320.0, 40.0, 60.0).finished();
  cfg.change_a = (Vec(3) << 40.0, 10.0, 0.0).finished();
  cfg.change_b = (Vec(3) << 30.0, 0.0, 10.0).finished();
  return cfg;
}

void DgpConfig::validate() const {
  const auto p = static_cast<Eigen::Index>(covariates.size()) + 1;
  if (level_a.size() != p || level_b.size() != p || change_a.size() != p ||
      change_b.size() != p)
    throw InvalidConfigError("coefficient curve length must be 1 + #covariates");
  if (!(kappa >= 0.0 && kappa <= 1.0))
    throw InvalidConfigError("kappa must lie in [0,1]");
  if (!(unemployment_prob >= 0.0 && unemployment_prob <= 1.0))
    throw InvalidConfigError("unemployment_prob must lie in [0,1]");
  if (n_treated <= p || n_untreated <= p)
    throw InvalidConfigError("group sizes must exceed the design width");
  for (const auto& c : covariates) {
    if (c.is_binary) {
      if (!(c.p >= 0.0 && c.p <= 1.0))
        throw InvalidConfigError("binary covariate probability out of [0,1]");
      if (c.p_treated >= 0.0 && c.p_treated > 1.0)
        throw InvalidConfigError("treated probability out of [0,1]");
    } else if (!(c.hi > c.lo)) {
      throw InvalidConfigError("continuous covariate needs hi > lo");
    }
  }
  if (effect_rule == EffectRule::CovariateLinear &&
      effect_covariate_coef.size() != p)
    throw InvalidConfigError("effect_covariate_coef length must be 1 + #covariates");

  // The scale x'b must stay positive over the covariate box, otherwise the
  // conditional quantile model is not monotone.
  const auto k = static_cast<std::size_t>(covariates.size());
  if (k <= 12) {
    for (std::size_t mask = 0; mask < (1u << k); ++mask) {
      Vec x(p);
      x[0] = 1.0;
      for (std::size_t c = 0; c < k; ++c) {
        const auto& cov = covariates[c];
        double extreme;
        if (cov.is_binary) {
          extreme = (mask >> c) & 1 ? 1.0 : 0.0;
        } else {
          double lo = cov.lo, hi = cov.hi;
          if (cov.hi_treated > cov.lo_treated) {
            lo = std::min(lo, cov.lo_treated);
            hi = std::max(hi, cov.hi_treated);
          }
          extreme = (mask >> c) & 1 ? hi : lo;
        }
        x[static_cast<Eigen::Index>(c) + 1] = extreme;
      }
      if (x.dot(level_b) <= 0.0 || x.dot(level_b + change_b) <= 0.0)
        throw InvalidConfigError("scale coefficients x'b non-positive on support");
    }
  }
}

double spearman_of_kappa(double kappa) {
  return 6.0 / M_PI * std::asin(kappa / 2.0);
}

SimulatedPanel simulate_dgp(const DgpConfig& config) {
  config.validate();
  rng::Stream stream(config.seed, 0);

  const auto k = static_cast<Eigen::Index>(config.covariates.size());
  const auto p = k + 1;
  const int n_total = config.n_treated + config.n_untreated;
  const Vec a2 = config.level_a + config.change_a;
  const Vec b2 = config.level_b + config.change_b;

  SimulatedPanel out;
  Panel& panel = out.panel;
  panel.y_t.resize(n_total);
  panel.y_tm1.resize(n_total);
  panel.covariates.resize(n_total, k);
  for (const auto& c : config.covariates)
    panel.covariate_names.push_back(c.name);

  std::vector<double> effects;
  effects.reserve(static_cast<std::size_t>(config.n_treated));

  char idbuf[32];
  for (int i = 0; i < n_total; ++i) {
    const bool is_treated = i < config.n_treated;
    std::snprintf(idbuf, sizeof(idbuf), "%c%06d", is_treated ? 'T' : 'C',
                  is_treated ? i + 1 : i - config.n_treated + 1);
    panel.unit_ids.emplace_back(idbuf);
    panel.treated.push_back(is_treated ? 1 : 0);

    Vec x(p);
    x[0] = 1.0;
    for (Eigen::Index c = 0; c < k; ++c) {
      const auto& cov = config.covariates[static_cast<std::size_t>(c)];
      if (cov.is_binary) {
        const double pr =
            is_treated && cov.p_treated >= 0.0 ? cov.p_treated : cov.p;
        x[c + 1] = stream.bernoulli(pr) ? 1.0 : 0.0;
      } else {
        double lo = cov.lo, hi = cov.hi;
        if (is_treated && cov.hi_treated > cov.lo_treated) {
          lo = cov.lo_treated;
          hi = cov.hi_treated;
        }
        x[c + 1] = stream.uniform(lo, hi);
      }
      panel.covariates(i, c) = x[c + 1];
    }

    // Gaussian rank copula across periods.
    const double z1 = stream.normal();
    const double eps = stream.normal();
    const double zt =
        config.kappa * z1 + std::sqrt(std::max(0.0, 1.0 - config.kappa * config.kappa)) * eps;
    const double y_tm1 = x.dot(config.level_a) + x.dot(config.level_b) * z1;
    const double y_t0 = x.dot(a2) + x.dot(b2) * zt;
    panel.y_tm1[i] = y_tm1;

    // Effect draws advance the stream for every unit so that changing a
    // unit's group label does not shift other units' draws.
    double base = 0.0;
    switch (config.effect_rule) {
      case EffectRule::Constant:
        base = config.effect_constant;
        break;
      case EffectRule::CovariateLinear:
        base = x.dot(config.effect_covariate_coef);
        break;
      case EffectRule::Y0Linear:
        base = config.effect_y0_intercept + config.effect_y0_slope * y_t0;
        break;
    }
    const double noise =
        config.effect_noise_sd > 0.0 ? config.effect_noise_sd * stream.normal() : 0.0;
    const bool unemployed =
        config.unemployment_prob > 0.0 && stream.bernoulli(config.unemployment_prob);

    if (is_treated) {
      double y1 = y_t0 + base + noise;
      if (unemployed) y1 = 0.0;
      panel.y_t[i] = y1;
      out.truth.true_y0_treated.push_back(y_t0);
      effects.push_back(y1 - y_t0);
    } else {
      panel.y_t[i] = y_t0;
    }
  }

  TruthRecord& truth = out.truth;
  truth.att = mean_of(effects);
  truth.dte_cdf = empirical_cdf(effects, make_support(effects, 400));
  truth.spearman_tm1_t0 = spearman_of_kappa(config.kappa);
  truth.analytic_second_stage = config.unemployment_prob == 0.0 &&
                                config.effect_rule != EffectRule::Constant;
  truth.effect_rule = config.effect_rule;
  truth.effect_covariate_coef = config.effect_covariate_coef;
  truth.effect_y0_intercept = config.effect_y0_intercept;
  truth.effect_y0_slope = config.effect_y0_slope;
  truth.effect_noise_sd = config.effect_noise_sd;
  truth.seed = config.seed;
  truth.kappa = config.kappa;
  return out;
}

void write_truth(const TruthRecord& truth, const std::string& path) {
  json j;
  j["true_y0_treated"] = truth.true_y0_treated;
  j["att"] = truth.att;
  j["dte_support"] = std::vector<double>(
      truth.dte_cdf.support.data(),
      truth.dte_cdf.support.data() + truth.dte_cdf.support.size());
  j["dte_cdf"] = std::vector<double>(
      truth.dte_cdf.cdf.data(), truth.dte_cdf.cdf.data() + truth.dte_cdf.cdf.size());
  j["spearman_tm1_t0"] = truth.spearman_tm1_t0;
  j["analytic_second_stage"] = truth.analytic_second_stage;
  j["effect_rule"] = static_cast<int>(truth.effect_rule);
  j["effect_covariate_coef"] = std::vector<double>(
      truth.effect_covariate_coef.data(),
      truth.effect_covariate_coef.data() + truth.effect_covariate_coef.size());
  j["effect_y0_intercept"] = truth.effect_y0_intercept;
  j["effect_y0_slope"] = truth.effect_y0_slope;
  j["effect_noise_sd"] = truth.effect_noise_sd;
  j["seed"] = truth.seed;
  j["kappa"] = truth.kappa;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << j.dump(2) << "\n";
}

TruthRecord load_truth(const std::string& path) {
  json j;
  try {
    j = json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw IoError("truth sidecar parse error: " + std::string(e.what()));
  }
  TruthRecord t;
  t.true_y0_treated = j.at("true_y0_treated").get<std::vector<double>>();
  t.att = j.at("att").get<double>();
  const auto sup = j.at("dte_support").get<std::vector<double>>();
  const auto cdf = j.at("dte_cdf").get<std::vector<double>>();
  t.dte_cdf.support = Eigen::Map<const Vec>(sup.data(), static_cast<Eigen::Index>(sup.size()));
  t.dte_cdf.cdf = Eigen::Map<const Vec>(cdf.data(), static_cast<Eigen::Index>(cdf.size()));
  t.spearman_tm1_t0 = j.at("spearman_tm1_t0").get<double>();
  t.analytic_second_stage = j.at("analytic_second_stage").get<bool>();
  t.effect_rule = static_cast<EffectRule>(j.at("effect_rule").get<int>());
  const auto coef = j.at("effect_covariate_coef").get<std::vector<double>>();
  t.effect_covariate_coef =
      Eigen::Map<const Vec>(coef.data(), static_cast<Eigen::Index>(coef.size()));
  t.effect_y0_intercept = j.at("effect_y0_intercept").get<double>();
  t.effect_y0_slope = j.at("effect_y0_slope").get<double>();
  t.effect_noise_sd = j.at("effect_noise_sd").get<double>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.kappa = j.at("kappa").get<double>();
  return t;
}

void write_curve_csv(const CurveResult& curve, const std::string& path) {
  const Eigen::Index n = curve.points.size();
  if (curve.estimate.size() != n)
    throw std::invalid_argument("curve: estimate length mismatch");
  auto col = [&](const std::optional<Vec>& v, Eigen::Index i) {
    return v ? (*v)[i] : curve.estimate[i];
  };
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "point,estimate,lo_pw,hi_pw,lo_unif,hi_unif\n";
  for (Eigen::Index i = 0; i < n; ++i) {
    out << fmt_double(curve.points[i]) << "," << fmt_double(curve.estimate[i])
        << "," << fmt_double(col(curve.lo_pw, i)) << ","
        << fmt_double(col(curve.hi_pw, i)) << ","
        << fmt_double(col(curve.lo_unif, i)) << ","
        << fmt_double(col(curve.hi_unif, i)) << "\n";
  }
  if (!out) throw IoError("write failed: " + path);
}

CurveResult read_curve_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty curve file " + path);
  std::vector<std::array<double, 6>> rows;
  std::int64_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 6)
      throw IoError("curve row " + std::to_string(line_no) + " malformed");
    std::array<double, 6> row{};
    for (std::size_t c = 0; c < 6; ++c)
      row[c] = parse_number(fields[c], "curve " + path);
    rows.push_back(row);
  }
  CurveResult out;
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.points.resize(n);
  out.estimate.resize(n);
  Vec lo_pw(n), hi_pw(n), lo_unif(n), hi_unif(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& row = rows[static_cast<std::size_t>(i)];
    out.points[i] = row[0];
    out.estimate[i] = row[1];
    lo_pw[i] = row[2];
    hi_pw[i] = row[3];
    lo_unif[i] = row[4];
    hi_unif[i] = row[5];
  }
  out.lo_pw = lo_pw;
  out.hi_pw = hi_pw;
  out.lo_unif = lo_unif;
  out.hi_unif = hi_unif;
  return out;
}

}  // namespace rankdte::io
