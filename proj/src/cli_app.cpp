#include "cli_app.hpp"

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "rankdte/counterfactual.hpp"
#include "rankdte/dataio.hpp"
#include "rankdte/effects.hpp"
#include "rankdte/inference.hpp"
#include "rankdte/robustness.hpp"
#include "rankdte/version.hpp"

namespace rankdte::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

enum class FirstStep { Algorithm1, Cic, Lagged };

struct RunConfig {
  std::string input;
  std::string schema;
  std::string taus = "0.01:0.99:99";
  int support_points = 400;
  int boot = 1000;
  int reps = 1000;
  std::uint64_t seed = 12345;
  double level = 0.95;
  std::string first_step = "algorithm1";
  std::string out_dir = ".";
};

std::vector<double> parse_tau_spec(const std::string& spec) {
  double lo = 0.0, hi = 0.0;
  int count = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3 ||
      count < 1 || !(lo > 0.0) || !(hi < 1.0) || !(hi >= lo))
    throw InvalidConfigError("tau spec must be lo:hi:count inside (0,1): " +
                             spec);
  std::vector<double> grid(static_cast<std::size_t>(count));
  if (count == 1) {
    grid[0] = lo;
    return grid;
  }
  const double step = (hi - lo) / (count - 1);
  for (int i = 0; i < count; ++i)
    grid[static_cast<std::size_t>(i)] = lo + step * i;
  grid.back() = hi;
  return grid;
}

FirstStep parse_first_step(const std::string& s) {
  if (s == "algorithm1") return FirstStep::Algorithm1;
  if (s == "cic") return FirstStep::Cic;
  if (s == "lagged") return FirstStep::Lagged;
  throw InvalidConfigError("first-step must be algorithm1|cic|lagged: " + s);
}

Panel load_input(const RunConfig& cfg, io::LoadReport* report) {
  if (cfg.input.empty()) throw InvalidConfigError("--input is required");
  if (cfg.schema.empty()) throw InvalidConfigError("--schema is required");
  return io::load_panel(cfg.input, io::PanelSchema::from_json_file(cfg.schema),
                        report);
}

std::vector<ImputedPair> impute(const Panel& panel, FirstStep step,
                                const std::vector<double>& grid) {
  switch (step) {
    case FirstStep::Algorithm1: {
      cf::Algorithm1Options opts;
      opts.tau_grid = grid;
      return cf::algorithm1(panel, opts).pairs;
    }
    case FirstStep::Cic: {
      cf::CicOptions opts;
      opts.tau_grid = grid;
      return cf::cic_impute(panel, opts);
    }
    case FirstStep::Lagged:
      return cf::lagged_impute(panel);
  }
  throw std::logic_error("unreachable");
}

std::string sanitize(const std::string& name) {
  std::string out;
  for (char c : name)
    out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  while (!out.empty() && out.front() == '_') out.erase(out.begin());
  while (!out.empty() && out.back() == '_') out.pop_back();
  return out.empty() ? "col" : out;
}

json config_json(const RunConfig& cfg, const std::string& command) {
  json j;
  j["command"] = command;
  j["input"] = cfg.input;
  j["schema"] = cfg.schema;
  j["taus"] = cfg.taus;
  j["support_points"] = cfg.support_points;
  j["boot"] = cfg.boot;
  j["reps"] = cfg.reps;
  j["seed"] = cfg.seed;
  j["level"] = cfg.level;
  j["first_step"] = cfg.first_step;
  j["out"] = cfg.out_dir;
  j["version"] = kVersion;
  return j;
}

void write_manifest(const fs::path& dir, const json& manifest) {
  std::ofstream out(dir / "manifest.json", std::ios::binary);
  if (!out) throw IoError("cannot write manifest.json");
  out << manifest.dump(2) << "\n";
}

io::CurveResult slice_envelope(const std::string& name, const Vec& points,
                               const boot::BootstrapEnvelope& env,
                               Eigen::Index offset, Eigen::Index len) {
  io::CurveResult curve;
  curve.name = name;
  curve.points = points;
  curve.estimate = env.point_estimate.segment(offset, len);
  curve.lo_pw = env.lo_pw.segment(offset, len);
  curve.hi_pw = env.hi_pw.segment(offset, len);
  curve.lo_unif = env.lo_unif.segment(offset, len);
  curve.hi_unif = env.hi_unif.segment(offset, len);
  return curve;
}

json scalar_with_interval(const boot::BootstrapEnvelope& env,
                          Eigen::Index index) {
  json j;
  j["estimate"] = env.point_estimate[index];
  j["lo"] = env.lo_pw[index];
  j["hi"] = env.hi_pw[index];
  return j;
}

std::vector<double> pooled_outcomes(const Panel& panel) {
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(2 * panel.n()));
  for (Eigen::Index i = 0; i < panel.n(); ++i) {
    v.push_back(panel.y_t[i]);
    v.push_back(panel.y_tm1[i]);
  }
  return v;
}

// ---------------------------------------------------------------------------

int cmd_estimate(const RunConfig& cfg) {
  const auto grid = parse_tau_spec(cfg.taus);
  const auto step = parse_first_step(cfg.first_step);
  io::LoadReport report;
  const Panel panel = load_input(cfg, &report);
  const Vec support = make_support(pooled_outcomes(panel), cfg.support_points);
  const auto qtt_taus = grid;
  const auto K = support.size();
  const auto T = static_cast<Eigen::Index>(qtt_taus.size());

  auto estimator = [&, step](const Panel& p) -> Vec {
    DistributionCurve cf_curve;
    std::vector<ImputedPair> pairs;
    if (step == FirstStep::Algorithm1) {
      cf::Algorithm1Options opts;
      opts.tau_grid = grid;
      const auto fit = cf::algorithm1(p, opts);
      pairs = fit.pairs;
      cf_curve = cf::counterfactual_distribution(fit, p, support).averaged;
    } else {
      pairs = impute(p, step, grid);
      std::vector<double> imputations;
      for (const auto& pr : pairs) imputations.push_back(pr.y0_hat);
      cf_curve = empirical_cdf(imputations, support);
    }
    const auto observed = cf::observed_treated_cdf(p, support);
    Vec out(K + 1 + T);
    out.head(K) = cf_curve.cdf;
    out[K] = cf::att(pairs);
    out.tail(T) = cf::qtt(observed, cf_curve, qtt_taus).effects;
    return out;
  };

  boot::BootstrapOptions bopts;
  bopts.B = cfg.boot;
  bopts.seed = cfg.seed;
  bopts.level = cfg.level;
  const auto env = boot::bootstrap(estimator, panel, bopts);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);

  const auto observed = cf::observed_treated_cdf(panel, support);
  io::CurveResult obs_curve;
  obs_curve.name = "observed_cdf";
  obs_curve.points = support;
  obs_curve.estimate = observed.cdf;
  io::write_curve_csv(obs_curve, (dir / "observed_cdf.csv").string());

  io::write_curve_csv(slice_envelope("counterfactual_cdf", support, env, 0, K),
                      (dir / "counterfactual_cdf.csv").string());
  Vec tau_points(T);
  for (Eigen::Index t = 0; t < T; ++t)
    tau_points[t] = qtt_taus[static_cast<std::size_t>(t)];
  io::write_curve_csv(slice_envelope("qtt", tau_points, env, K + 1, T),
                      (dir / "qtt.csv").string());

  json manifest = config_json(cfg, "estimate");
  manifest["att"] = scalar_with_interval(env, K);
  manifest["n_bootstrap_failed"] = env.n_failed;
  manifest["warnings"] = env.warnings;
  manifest["load_report"] = {
      {"rows_read", report.n_rows_read},
      {"dropped_missing_untreated", report.n_dropped_missing_untreated},
      {"dropped_treated_missing_tm1", report.n_dropped_treated_missing_tm1},
      {"dropped_not_in_labor_force", report.n_dropped_not_in_labor_force},
      {"zero_coded", report.n_zero_coded}};
  manifest["outputs"] = {"observed_cdf.csv", "counterfactual_cdf.csv",
                         "qtt.csv"};
  write_manifest(dir, manifest);
  return 0;
}

int cmd_dte(const RunConfig& cfg) {
  const auto grid = parse_tau_spec(cfg.taus);
  const auto step = parse_first_step(cfg.first_step);
  const Panel panel = load_input(cfg, nullptr);

  const auto base_pairs = impute(panel, step, grid);
  std::vector<double> base_deltas;
  for (const auto& pr : base_pairs) base_deltas.push_back(pr.y1 - pr.y0_hat);
  const Vec support = make_support(base_deltas, cfg.support_points);
  const auto K = support.size();
  const std::vector<double> thresholds = {0.0, -500.0, -1000.0};

  auto estimator = [&, step](const Panel& p) -> Vec {
    const auto pairs = impute(p, step, grid);
    const auto sample = to_effect_sample(pairs, p.covariate_names);
    const auto dte = eff::dte_distribution(sample, support);
    Vec out(K + 3);
    out.head(K) = dte.cdf;
    out[K] = eff::fraction_above(sample, thresholds[0]);
    out[K + 1] = 1.0 - eff::fraction_above(sample, thresholds[1]);
    out[K + 2] = 1.0 - eff::fraction_above(sample, thresholds[2]);
    return out;
  };

  boot::BootstrapOptions bopts;
  bopts.B = cfg.boot;
  bopts.seed = cfg.seed;
  bopts.level = cfg.level;
  const auto env = boot::bootstrap(estimator, panel, bopts);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  io::write_curve_csv(slice_envelope("dte_cdf", support, env, 0, K),
                      (dir / "dte_cdf.csv").string());

  {
    std::ofstream out(dir / "thresholds.csv", std::ios::binary);
    if (!out) throw IoError("cannot write thresholds.csv");
    out << "threshold,measure,estimate,lo_pw,hi_pw\n";
    const char* measures[3] = {"share_above", "share_below", "share_below"};
    char buf[256];
    for (int t = 0; t < 3; ++t) {
      const Eigen::Index j = K + t;
      std::snprintf(buf, sizeof(buf), "%.17g,%s,%.17g,%.17g,%.17g\n",
                    thresholds[static_cast<std::size_t>(t)], measures[t],
                    env.point_estimate[j], env.lo_pw[j], env.hi_pw[j]);
      out << buf;
    }
  }

  json manifest = config_json(cfg, "dte");
  manifest["n_bootstrap_failed"] = env.n_failed;
  manifest["warnings"] = env.warnings;
  manifest["outputs"] = {"dte_cdf.csv", "thresholds.csv"};
  write_manifest(dir, manifest);
  return 0;
}

int cmd_qr_effects(const RunConfig& cfg) {
  const auto grid = parse_tau_spec(cfg.taus);
  const auto step = parse_first_step(cfg.first_step);
  const Panel panel = load_input(cfg, nullptr);
  const auto taus = eff::reporting_tau_grid();
  const auto T = static_cast<Eigen::Index>(taus.size());
  const auto p = panel.covariates.cols() + 1;

  // Stacked layout: covariate QR curves (p blocks of T), covariate OLS (p),
  // y0 QR curves (2 blocks of T), y0 OLS (2).
  const Eigen::Index total = p * T + p + 2 * T + 2;
  auto estimator = [&, step](const Panel& pl) -> Vec {
    const auto pairs = impute(pl, step, grid);
    const auto sample = to_effect_sample(pairs, pl.covariate_names);
    const auto cov = eff::qr_effects_on_covariates(sample, taus);
    const auto y0 = eff::qr_effects_on_y0(sample, taus);
    Vec out(total);
    Eigen::Index off = 0;
    for (Eigen::Index j = 0; j < p; ++j, off += T)
      out.segment(off, T) = cov.coefficients.col(j);
    out.segment(off, p) = cov.ols_coefficients;
    off += p;
    for (Eigen::Index j = 0; j < 2; ++j, off += T)
      out.segment(off, T) = y0.coefficients.col(j);
    out.segment(off, 2) = y0.ols_coefficients;
    return out;
  };

  boot::BootstrapOptions bopts;
  bopts.B = cfg.boot;
  bopts.seed = cfg.seed;
  bopts.level = cfg.level;
  const auto env = boot::bootstrap(estimator, panel, bopts);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  Vec tau_points(T);
  for (Eigen::Index t = 0; t < T; ++t)
    tau_points[t] = taus[static_cast<std::size_t>(t)];

  std::vector<std::string> design_names = {"intercept"};
  for (const auto& name : panel.covariate_names)
    design_names.push_back(sanitize(name));

  json manifest = config_json(cfg, "qr-effects");
  json ols = json::object();
  std::vector<std::string> outputs;
  Eigen::Index off = 0;
  for (Eigen::Index j = 0; j < p; ++j, off += T) {
    const std::string file =
        "effects_cov_" + design_names[static_cast<std::size_t>(j)] + ".csv";
    io::write_curve_csv(slice_envelope(file, tau_points, env, off, T),
                        (dir / file).string());
    outputs.push_back(file);
  }
  for (Eigen::Index j = 0; j < p; ++j)
    ols[design_names[static_cast<std::size_t>(j)]] =
        scalar_with_interval(env, off + j);
  off += p;
  const char* y0_names[2] = {"intercept", "slope"};
  for (Eigen::Index j = 0; j < 2; ++j, off += T) {
    const std::string file = std::string("effects_y0_") + y0_names[j] + ".csv";
    io::write_curve_csv(slice_envelope(file, tau_points, env, off, T),
                        (dir / file).string());
    outputs.push_back(file);
  }
  json y0_ols = json::object();
  for (Eigen::Index j = 0; j < 2; ++j)
    y0_ols[y0_names[j]] = scalar_with_interval(env, off + j);

  manifest["ols_on_covariates"] = ols;
  manifest["ols_on_y0"] = y0_ols;
  manifest["reporting_taus"] = taus;
  manifest["n_bootstrap_failed"] = env.n_failed;
  manifest["warnings"] = env.warnings;
  manifest["outputs"] = outputs;
  write_manifest(dir, manifest);
  return 0;
}

int cmd_robustness(const RunConfig& cfg) {
  const auto grid = parse_tau_spec(cfg.taus);
  const Panel panel = load_input(cfg, nullptr);

  robust::PlaceboOptions popts;
  popts.tau_grid = grid;
  popts.support_points = cfg.support_points;
  const auto het = robust::placebo_heterogeneity(panel, popts);

  robust::RtmOptions ropts;
  ropts.n_pseudo_treated =
      static_cast<int>(panel.treated_indices().size());
  ropts.R = cfg.reps;
  ropts.seed = cfg.seed;
  ropts.first_stage_grid = grid;
  const auto rtm = robust::rtm_placebo(panel, ropts);

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);

  auto curve_of = [](const std::string& name, const DistributionCurve& c) {
    io::CurveResult out;
    out.name = name;
    out.points = c.support;
    out.estimate = c.cdf;
    return out;
  };
  io::write_curve_csv(curve_of("heterogeneity_treated", het.heterogeneity_treated),
                      (dir / "heterogeneity_treated.csv").string());
  io::write_curve_csv(
      curve_of("heterogeneity_untreated", het.heterogeneity_untreated),
      (dir / "heterogeneity_untreated.csv").string());

  io::CurveResult rtm_curve;
  rtm_curve.name = "rtm_qr_slope";
  rtm_curve.points.resize(static_cast<Eigen::Index>(rtm.taus.size()));
  for (std::size_t t = 0; t < rtm.taus.size(); ++t)
    rtm_curve.points[static_cast<Eigen::Index>(t)] = rtm.taus[t];
  rtm_curve.estimate = rtm.mean_qr_slope;
  rtm_curve.lo_pw = rtm.p05_qr_slope;
  rtm_curve.hi_pw = rtm.p95_qr_slope;
  rtm_curve.lo_unif = rtm.p05_qr_slope;
  rtm_curve.hi_unif = rtm.p95_qr_slope;
  io::write_curve_csv(rtm_curve, (dir / "rtm_qr_slopes.csv").string());

  json manifest = config_json(cfg, "robustness");
  manifest["spearman"] = {{"treated", het.spearman_treated},
                          {"untreated", het.spearman_untreated}};
  manifest["sd_effect"] = {{"treated", het.sd_effect_treated},
                           {"untreated", het.sd_effect_untreated}};
  manifest["rtm_ols_slope"] = {{"mean", rtm.mean_ols_slope},
                               {"p05", rtm.p05_ols_slope},
                               {"p95", rtm.p95_ols_slope},
                               {"n_failed", rtm.n_failed}};
  manifest["outputs"] = {"heterogeneity_treated.csv",
                         "heterogeneity_untreated.csv", "rtm_qr_slopes.csv"};
  write_manifest(dir, manifest);
  return 0;
}

int cmd_spec_test(const RunConfig& cfg) {
  const auto grid = parse_tau_spec(cfg.taus);
  const Panel panel = load_input(cfg, nullptr);

  robust::RotheWiedOptions topts;
  topts.tau_grid = grid;
  topts.B = cfg.boot;
  topts.seed = cfg.seed;

  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  std::ofstream out(dir / "spec_test.csv", std::ios::binary);
  if (!out) throw IoError("cannot write spec_test.csv");
  out << "group,statistic,p_value\n";

  json manifest = config_json(cfg, "spec-test");
  json groups = json::object();
  char buf[160];
  for (const int treated : {1, 0}) {
    const auto idx =
        treated ? panel.treated_indices() : panel.untreated_indices();
    Mat covs(static_cast<Eigen::Index>(idx.size()), panel.covariates.cols());
    Vec y(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) {
      covs.row(static_cast<Eigen::Index>(i)) = panel.covariates.row(idx[i]);
      y[static_cast<Eigen::Index>(i)] = panel.y_tm1[idx[i]];
    }
    const auto design =
        DesignMatrix::with_intercept(covs, panel.covariate_names);
    const auto result = robust::rothe_wied_test(design, y, topts);
    const char* name = treated ? "treated" : "untreated";
    std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g\n", name, result.statistic,
                  result.p_value);
    out << buf;
    groups[name] = {{"statistic", result.statistic},
                    {"p_value", result.p_value},
                    {"warnings", result.warnings}};
  }
  manifest["groups"] = groups;
  manifest["outputs"] = {"spec_test.csv"};
  write_manifest(dir, manifest);
  return 0;
}

struct SimulateConfig {
  int n_treated = 500;
  int n_untreated = 1000;
  double kappa = 1.0;
  double effect = -100.0;
  double unemployment = 0.0;
  std::string dgp_json;
};

int cmd_simulate(const RunConfig& cfg, const SimulateConfig& sim) {
  io::DgpConfig dgp;
  if (!sim.dgp_json.empty()) {
    std::ifstream in(sim.dgp_json, std::ios::binary);
    if (!in) throw IoError("cannot open " + sim.dgp_json);
    json j = json::parse(in, nullptr, true);
    dgp = io::DgpConfig::basic(j.value("n_treated", sim.n_treated),
                               j.value("n_untreated", sim.n_untreated),
                               cfg.seed);
    dgp.kappa = j.value("kappa", sim.kappa);
    dgp.effect_constant = j.value("effect_constant", sim.effect);
    dgp.unemployment_prob = j.value("unemployment_prob", sim.unemployment);
    if (j.contains("effect_noise_sd"))
      dgp.effect_noise_sd = j["effect_noise_sd"].get<double>();
    if (j.contains("effect_rule")) {
      const std::string rule = j["effect_rule"].get<std::string>();
      if (rule == "constant")
        dgp.effect_rule = io::EffectRule::Constant;
      else if (rule == "covariate-linear")
        dgp.effect_rule = io::EffectRule::CovariateLinear;
      else if (rule == "y0-linear")
        dgp.effect_rule = io::EffectRule::Y0Linear;
      else
        throw InvalidConfigError("unknown effect_rule: " + rule);
    }
    if (j.contains("effect_covariate_coef")) {
      const auto v = j["effect_covariate_coef"].get<std::vector<double>>();
      dgp.effect_covariate_coef =
          Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    dgp.effect_y0_intercept = j.value("effect_y0_intercept", 0.0);
    dgp.effect_y0_slope = j.value("effect_y0_slope", 0.0);
  } else {
    dgp = io::DgpConfig::basic(sim.n_treated, sim.n_untreated, cfg.seed);
    dgp.kappa = sim.kappa;
    dgp.effect_constant = sim.effect;
    dgp.unemployment_prob = sim.unemployment;
  }
  dgp.seed = cfg.seed;

  const auto simulated = io::simulate_dgp(dgp);
  const fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  io::write_panel(simulated.panel, (dir / "panel.csv").string());
  io::write_truth(simulated.truth, (dir / "truth.json").string());

  io::PanelSchema schema;
  schema.id = "id";
  schema.treated = "treated";
  schema.y_t = "y_t";
  schema.y_tm1 = "y_tm1";
  for (const auto& name : simulated.panel.covariate_names)
    schema.covariates.push_back({name, false, ""});
  {
    std::ofstream out(dir / "schema.json", std::ios::binary);
    if (!out) throw IoError("cannot write schema.json");
    out << schema.to_json_text();
  }

  json manifest = config_json(cfg, "simulate");
  manifest["dgp"] = {{"n_treated", dgp.n_treated},
                     {"n_untreated", dgp.n_untreated},
                     {"kappa", dgp.kappa},
                     {"effect_rule", static_cast<int>(dgp.effect_rule)},
                     {"effect_constant", dgp.effect_constant},
                     {"unemployment_prob", dgp.unemployment_prob},
                     {"seed", dgp.seed}};
  manifest["truth_att"] = simulated.truth.att;
  manifest["outputs"] = {"panel.csv", "truth.json", "schema.json"};
  write_manifest(dir, manifest);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Quantile-regression pipeline for the joint distribution of "
               "treated and counterfactual outcomes"};
  app.set_config("--config");
  app.require_subcommand(1);

  RunConfig cfg;
  SimulateConfig sim;

  auto add_common = [&](CLI::App* sub, bool needs_input) {
    if (needs_input) {
      sub->add_option("--input", cfg.input, "panel CSV path");
      sub->add_option("--schema", cfg.schema, "panel schema JSON path");
    }
    sub->add_option("--taus", cfg.taus, "tau grid as lo:hi:count");
    sub->add_option("--support", cfg.support_points, "support grid points");
    sub->add_option("--boot", cfg.boot, "bootstrap replicates");
    sub->add_option("--reps", cfg.reps, "placebo replicates");
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--level", cfg.level, "confidence level in (0,1)");
    sub->add_option("--first-step", cfg.first_step,
                    "algorithm1|cic|lagged");
    sub->add_option("--out", cfg.out_dir, "output directory");
  };

  CLI::App* estimate = app.add_subcommand(
      "estimate", "counterfactual distribution, ATT and QTT with bands");
  add_common(estimate, true);
  CLI::App* dte = app.add_subcommand(
      "dte", "distribution of treatment effects with uniform band");
  add_common(dte, true);
  CLI::App* qre = app.add_subcommand(
      "qr-effects", "second-stage quantile regressions of effects");
  add_common(qre, true);
  CLI::App* rob = app.add_subcommand(
      "robustness", "rank-invariance placebo checks");
  add_common(rob, true);
  CLI::App* spec = app.add_subcommand(
      "spec-test", "quantile regression specification test per group");
  add_common(spec, true);
  CLI::App* simulate = app.add_subcommand(
      "simulate", "synthetic panel with ground-truth sidecar");
  add_common(simulate, false);
  simulate->add_option("--n-treated", sim.n_treated, "treated units");
  simulate->add_option("--n-untreated", sim.n_untreated, "untreated units");
  simulate->add_option("--kappa", sim.kappa, "rank persistence in [0,1]");
  simulate->add_option("--effect", sim.effect, "constant treatment effect");
  simulate->add_option("--unemployment", sim.unemployment,
                       "treated zero-earnings probability");
  simulate->add_option("--dgp-json", sim.dgp_json, "full DGP config JSON");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help and friends
      std::cout << app.help();
      return 0;
    }
    nlohmann::json err;
    err["error"] = {{"type", "Usage"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 2;
  }

  try {
    if (cfg.boot < 1 || cfg.reps < 1)
      throw InvalidConfigError("--boot and --reps must be >= 1");
    if (!(cfg.level > 0.0 && cfg.level < 1.0))
      throw InvalidConfigError("--level must lie in (0,1)");
    if (estimate->parsed()) return cmd_estimate(cfg);
    if (dte->parsed()) return cmd_dte(cfg);
    if (qre->parsed()) return cmd_qr_effects(cfg);
    if (rob->parsed()) return cmd_robustness(cfg);
    if (spec->parsed()) return cmd_spec_test(cfg);
    if (simulate->parsed()) return cmd_simulate(cfg, sim);
    throw InvalidConfigError("no subcommand given");
  } catch (const Error& e) {
    nlohmann::json err;
    err["error"] = {{"type", e.code()}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    nlohmann::json err;
    err["error"] = {{"type", "Internal"}, {"message", e.what()}};
    std::cerr << err.dump() << "\n";
    return 1;
  }
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args);
}

}  // namespace rankdte::cli
