#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <boost/math/special_functions/gamma.hpp>
#include <CLI11.hpp>
#include <json.hpp>

#include "copjoint/comparators.hpp"
#include "copjoint/dataset.hpp"
#include "copjoint/errors.hpp"
#include "copjoint/harness.hpp"
#include "copjoint/simgen.hpp"
#include "copjoint/studies.hpp"

namespace fs = std::filesystem;

namespace copjoint {

namespace {

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<std::pair<std::string, std::string>> sim_mapping() {
  return {{"treatment_covariates", "x1,x2,x3,x4,x5,x6"},
          {"transformed_covariate", "x1 -> cos(2*pi*x) + sin(pi*x)"},
          {"outcome_covariates", "Y1,x3,x7,x8,x9,x10"},
          {"copula_fit", "gaussian probit-probit"},
          {"one_stage", "cox (breslow) on rows with observed y2, sign flipped"},
          {"two_stage", "logistic first stage, fitted probability in a logistic outcome model"}};
}

SimScenario scenario_from_args(const CliArgs& a) {
  if (a.scenario.empty()) throw ConfigError("--scenario is required");
  SimScenario s = load_scenario(a.scenario);
  if (a.seed) s.seed = *a.seed;
  if (a.replicates) s.replicates = *a.replicates;
  s.validate();
  return s;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_svg_curve(const std::string& path, const Sim1Result& r) {
  const double w = 640, h = 400, ml = 60, mr = 20, mt = 20, mb = 50;
  double lo = 0.0, hi = 0.0;
  for (const auto& p : r.points) {
    for (double v : {p.lo, p.hi, p.oracle}) {
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (hi - lo < 1e-9) hi = lo + 1.0;
  auto sx = [&](double q) { return ml + (q - 0.0) / 1.0 * (w - ml - mr); };
  auto sy = [&](double v) { return mt + (hi - v) / (hi - lo) * (h - mt - mb); };
  std::ofstream o(path);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<line x1=\"" << ml << "\" y1=\"" << sy(0) << "\" x2=\"" << w - mr << "\" y2=\"" << sy(0)
    << "\" stroke=\"#999\" stroke-dasharray=\"4\"/>\n";
  o << "<text x=\"" << w / 2 << "\" y=\"" << h - 10 << "\" text-anchor=\"middle\" font-size=\"13\">cutoff quantile</text>\n";
  o << "<text x=\"15\" y=\"" << h / 2 << "\" font-size=\"13\" transform=\"rotate(-90 15 " << h / 2
    << ")\" text-anchor=\"middle\">SATE</text>\n";
  const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd"};
  std::map<std::pair<int, double>, std::vector<const Sim1Point*>> groups;
  for (const auto& p : r.points) groups[{p.n, p.censoring_target}].push_back(&p);
  int g = 0;
  for (const auto& [key, pts] : groups) {
    const char* col = colors[g++ % 4];
    std::string est, orc;
    for (const auto* p : pts) {
      if (std::isfinite(p->mean_sate)) est += std::to_string(sx(p->quantile)) + "," + std::to_string(sy(p->mean_sate)) + " ";
      orc += std::to_string(sx(p->quantile)) + "," + std::to_string(sy(p->oracle)) + " ";
      if (std::isfinite(p->lo))
        o << "<line x1=\"" << sx(p->quantile) << "\" y1=\"" << sy(p->lo) << "\" x2=\"" << sx(p->quantile) << "\" y2=\""
          << sy(p->hi) << "\" stroke=\"" << col << "\" stroke-opacity=\"0.5\"/>\n";
      o << "<polygon points=\"" << sx(p->quantile) << "," << sy(p->oracle) - 5 << " " << sx(p->quantile) - 4 << ","
        << sy(p->oracle) + 3 << " " << sx(p->quantile) + 4 << "," << sy(p->oracle) + 3 << "\" fill=\"orange\"/>\n";
    }
    o << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"2\" points=\"" << est << "\"/>\n";
    o << "<text x=\"" << w - mr - 150 << "\" y=\"" << mt + 15 * g << "\" font-size=\"12\" fill=\"" << col << "\">n="
      << key.first << ", censoring " << key.second << "</text>\n";
  }
  for (int k = 1; k < 10; ++k) {
    const double q = k / 10.0;
    o << "<text x=\"" << sx(q) << "\" y=\"" << h - mb + 15 << "\" font-size=\"11\" text-anchor=\"middle\">" << q
      << "</text>\n";
  }
  char buf[32];
  for (double v : {lo, 0.5 * (lo + hi), hi}) {
    std::snprintf(buf, sizeof buf, "%.3f", v);
    o << "<text x=\"" << ml - 5 << "\" y=\"" << sy(v) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << buf
      << "</text>\n";
  }
  o << "</svg>\n";
}

}  // namespace

int cmd_sim1(const CliArgs& a, std::ostream& log) {
  const SimScenario s = scenario_from_args(a);
  Manifest m;
  m.command = "sim1";
  m.started = now_utc();
  m.seed = s.seed;
  m.config_hash = hex64(fnv1a(read_file(a.scenario) + "|replicates=" + std::to_string(s.replicates)));
  m.covariate_mapping = sim_mapping();
  StudyOptions opt;
  opt.jobs = a.jobs;
  opt.n_oracle = a.n_oracle;
  log << "sim1: " << s.replicates << " replicates, n in {";
  for (std::size_t i = 0; i < s.n.size(); ++i) log << (i ? "," : "") << s.n[i];
  log << "}\n";
  const Sim1Result r = run_sim1(s, opt);
  int failed = 0;
  for (const auto& p : r.points) failed += p.n_failed;
  m.details = {{"replicates", std::to_string(s.replicates)},
               {"rho", num(s.rho)},
               {"specification", to_string(s.specification)},
               {"survival_model", to_string(s.survival_model)},
               {"n_oracle", std::to_string(opt.n_oracle)},
               {"excluded_fits", std::to_string(failed)}};
  const std::string mh = m.hash();

  Table curve{{"n", "censoring_target", "quantile", "mean_sate", "lo_2.5", "hi_97.5", "sd", "oracle", "oracle_se",
               "mean_tau", "n_ok", "n_failed"},
              {}};
  for (const auto& p : r.points)
    curve.rows.push_back({(long long)p.n, p.censoring_target, p.quantile, p.mean_sate, p.lo, p.hi, p.sd, p.oracle,
                          p.oracle_se, p.mean_tau, (long long)p.n_ok, (long long)p.n_failed});
  write_table(a.out, "sim1_curve", curve, mh);
  Table sel{{"n", "censoring_target", "quantile", "term", "truth_nonzero", "selection_rate"}, {}};
  for (const auto& sr : r.selection) {
    for (std::size_t j = 0; j < sr.names.size(); ++j)
      sel.rows.push_back({(long long)sr.n, sr.censoring_target, sr.quantile, sr.names[j], sr.truth_nonzero[j], sr.rate[j]});
  }
  write_table(a.out, "sim1_selection", sel, mh);
  if (a.figure) write_svg_curve((fs::path(a.out) / "sim1_curve.svg").string(), r);
  for (const auto& w : r.warnings) log << "warning: " << w << "\n";
  m.finished = now_utc();
  write_manifest(a.out, m);
  log << "sim1: wrote " << a.out << "/sim1_curve.csv (" << curve.rows.size() << " rows)\n";
  return 0;
}

int cmd_sim2(const CliArgs& a, std::ostream& log) {
  const SimScenario s = scenario_from_args(a);
  Manifest m;
  m.command = "sim2";
  m.started = now_utc();
  m.seed = s.seed;
  m.config_hash = hex64(fnv1a(read_file(a.scenario) + "|replicates=" + std::to_string(s.replicates)));
  m.covariate_mapping = sim_mapping();
  StudyOptions opt;
  opt.jobs = a.jobs;
  log << "sim2: " << s.replicates << " replicates, rho " << s.rho << "\n";
  const Sim2Result r = run_sim2(s, opt);
  int failed = 0;
  for (const auto& c : r.cells) failed += c.copula.n_failed;
  m.details = {{"replicates", std::to_string(s.replicates)},
               {"rho", num(s.rho)},
               {"truth", num(r.truth)},
               {"survival_model", to_string(s.survival_model)},
               {"excluded_copula_fits", std::to_string(failed)}};
  for (std::size_t i = 0; i < r.c_max.size(); ++i)
    {
      char key[48];
      std::snprintf(key, sizeof key, "c_max@%g", s.censoring_target[i]);
      m.details.emplace_back(key, num(r.c_max[i]));
    }
  const std::string mh = m.hash();
  Table bias{{"n", "censoring_target", "realized_censoring", "cutoff_quantile", "mean_missing", "one_stage_bias",
              "one_stage_sd", "one_stage_n", "copula_bias", "copula_sd", "copula_n", "copula_failed"},
             {}};
  Table two{{"n", "censoring_target", "cutoff_quantile", "two_stage_bias", "two_stage_sd", "two_stage_n",
             "two_stage_failed"},
            {}};
  for (const auto& c : r.cells) {
    bias.rows.push_back({(long long)c.n, c.censoring_target, c.realized_censoring, c.cutoff_quantile, c.mean_missing,
                         c.one_stage.mean_bias, c.one_stage.sd, (long long)c.one_stage.n_ok, c.copula.mean_bias,
                         c.copula.sd, (long long)c.copula.n_ok, (long long)c.copula.n_failed});
    two.rows.push_back({(long long)c.n, c.censoring_target, c.cutoff_quantile, c.two_stage.mean_bias, c.two_stage.sd,
                        (long long)c.two_stage.n_ok, (long long)c.two_stage.n_failed});
  }
  write_table(a.out, "sim2_bias", bias, mh);
  write_table(a.out, "sim2_2sps", two, mh);
  for (const auto& w : r.warnings) log << "warning: " << w << "\n";
  m.finished = now_utc();
  write_manifest(a.out, m);
  log << "sim2: wrote " << a.out << "/sim2_bias.csv (" << bias.rows.size() << " rows)\n";
  return 0;
}

namespace {

std::vector<std::string> referenced_columns(const ModelSpec& spec) {
  std::vector<std::string> cols;
  auto add = [&](const std::string& c) {
    if (std::find(cols.begin(), cols.end(), c) == cols.end()) cols.push_back(c);
  };
  for (const auto* m : {&spec.treatment, &spec.outcome}) {
    add(m->response);
    for (const auto* l : {&m->parametric_terms, &m->categorical_terms, &m->smooth_terms})
      for (const auto& c : *l) add(c);
  }
  return cols;
}

void check_schema(const Dataset& d, const ModelSpec& spec) {
  std::vector<std::string> errs;
  for (const auto& c : referenced_columns(spec)) {
    if (!d.has(c)) errs.push_back("missing column '" + c + "'");
  }
  if (!errs.empty()) {
    std::string msg;
    for (const auto& e : errs) msg += (msg.empty() ? "" : "\n") + e;
    throw DataError(msg);
  }
  std::set<std::string> binary{spec.treatment.response, spec.outcome.response};
  for (const auto& b : binary) {
    const auto& v = d.column(b);
    int observed = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::isnan(v(i))) continue;
      ++observed;
      if (v(i) != 0.0 && v(i) != 1.0)
        errs.push_back("column '" + b + "' row " + std::to_string(i + 2) + ": value " + num(v(i)) + " not in {0,1}");
    }
    if (observed == 0) errs.push_back("column '" + b + "' has no observed values");
  }
  for (const auto* m : {&spec.treatment, &spec.outcome}) {
    for (const auto& c : m->categorical_terms) {
      const auto& v = d.column(c);
      for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (!std::isnan(v(i)) && v(i) != std::round(v(i)))
          errs.push_back("column '" + c + "' row " + std::to_string(i + 2) + ": non-integer category code");
      }
    }
  }
  for (const auto& c : referenced_columns(spec)) {
    const auto& v = d.column(c);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (std::isinf(v(i))) errs.push_back("column '" + c + "' row " + std::to_string(i + 2) + ": infinite value");
    }
  }
  if (!errs.empty()) {
    std::string msg;
    for (const auto& e : errs) msg += (msg.empty() ? "" : "\n") + e;
    throw DataError(msg);
  }
}

double wald_p(const Eigen::VectorXd& b, const Eigen::MatrixXd& v, double edf, double* stat, int* rank) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (v + v.transpose()));
  const int k = static_cast<int>(b.size());
  const int r = std::clamp(static_cast<int>(std::lround(edf)), 1, k);
  double t = 0.0;
  for (int j = k - r; j < k; ++j) {
    const double ev = es.eigenvalues()(j);
    if (ev <= 0) continue;
    const double proj = es.eigenvectors().col(j).dot(b);
    t += proj * proj / ev;
  }
  *stat = t;
  *rank = r;
  return boost::math::gamma_q(0.5 * r, 0.5 * t);
}

}  // namespace

int cmd_analyze(const CliArgs& a, std::ostream& log) {
  if (a.data.empty()) throw ConfigError("--data is required");
  if (a.scenario.empty()) throw ConfigError("--scenario (model configuration) is required");
  AnalyzeConfig cfg = load_analyze_config(a.scenario);
  if (a.seed) cfg.seed = *a.seed;
  if (!a.families.empty() || !a.links.empty()) {
    std::vector<std::pair<Family, Rotation>> fams;
    std::vector<std::pair<Link, Link>> links;
    for (const auto& g : cfg.grid) {
      if (std::find(fams.begin(), fams.end(), std::make_pair(g.family, g.rotation)) == fams.end())
        fams.emplace_back(g.family, g.rotation);
      if (std::find(links.begin(), links.end(), std::make_pair(g.treatment_link, g.outcome_link)) == links.end())
        links.emplace_back(g.treatment_link, g.outcome_link);
    }
    if (!a.families.empty()) fams = parse_family_list(a.families);
    if (!a.links.empty()) links = parse_link_pairs(a.links);
    cfg.grid = cross_grid(fams, links);
  }
  Manifest m;
  m.command = "analyze";
  m.started = now_utc();
  m.seed = cfg.seed;
  const std::string data_bytes = read_file(a.data);
  m.config_hash = hex64(fnv1a(read_file(a.scenario) + "|" + data_bytes + "|" + a.families + "|" + a.links));

  CsvReadResult csv = parse_csv(data_bytes);
  if (!csv.errors.empty()) {
    std::string msg;
    for (const auto& e : csv.errors) msg += (msg.empty() ? "" : "\n") + e;
    throw DataError(msg);
  }
  check_schema(csv.data, cfg.spec);
  const auto cols = referenced_columns(cfg.spec);
  const auto keep = csv.data.complete_rows(cols);
  const long long rows_in = csv.data.n_rows();
  const long long rows_used = static_cast<long long>(keep.size());
  const long long dropped_missing = rows_in - rows_used;
  const long long dropped_invalid = 0;  // invalid values abort in check_schema
  if (rows_in != rows_used + dropped_missing + dropped_invalid) throw NumericalError("row accounting mismatch");
  const Dataset data = csv.data.select_rows(keep);
  log << "analyze: " << rows_in << " rows in, " << rows_used << " used, " << dropped_missing << " dropped (missing)\n";

  for (const auto* mg : {&cfg.spec.treatment, &cfg.spec.outcome}) {
    std::string terms;
    for (const auto& t : mg->parametric_terms) terms += t + ",";
    for (const auto& t : mg->categorical_terms) terms += "factor(" + t + "),";
    for (const auto& t : mg->smooth_terms) terms += "s(" + t + "),";
    if (!terms.empty()) terms.pop_back();
    const std::string eq = mg == &cfg.spec.treatment ? "treatment" : "outcome";
    m.covariate_mapping.emplace_back(eq + "_response", mg->response);
    m.covariate_mapping.emplace_back(eq + "_terms", terms);
  }
  m.details = {{"rows_in", std::to_string(rows_in)},
               {"rows_used", std::to_string(rows_used)},
               {"rows_dropped_missing", std::to_string(dropped_missing)},
               {"rows_dropped_invalid", std::to_string(dropped_invalid)},
               {"n_draws", std::to_string(cfg.n_draws)},
               {"level", num(cfg.level)},
               {"sate_variant", to_string(cfg.variant)},
               {"basis_dim", std::to_string(cfg.spec.basis_dim)}};

  GridOptions go;
  go.n_draws = cfg.n_draws;
  go.level = cfg.level;
  go.seed = cfg.seed;
  go.jobs = a.jobs;
  go.variant = cfg.variant;
  std::vector<std::string> warnings;
  const auto rows = model_grid(data, cfg.grid, cfg.spec, go, &warnings);
  for (const auto& w : warnings) log << "warning: " << w << "\n";
  const bool any_ok = std::any_of(rows.begin(), rows.end(), [](const ModelGridRow& r) { return !r.failed; });
  if (!any_ok) {
    std::string msg = "every model in the grid failed";
    for (const auto& r : rows) msg += "\n" + r.request.label() + ": " + r.error;
    throw NumericalError(msg);
  }
  const std::string mh = m.hash();

  Table grid{{"rank", "copula", "links", "sate", "sate_lo", "sate_hi", "tau", "tau_lo", "tau_hi", "theta", "aic", "bic",
              "loglik", "edf", "converged", "status"},
             {}};
  Table coef{{"model", "equation", "term", "estimate", "se", "z", "p_value"}, {}};
  Table smooth{{"model", "equation", "covariate", "edf", "lambda", "chi_sq", "ref_df", "p_value"}, {}};
  Table eval{{"model", "equation", "covariate", "x", "fit", "lo", "hi"}, {}};
  const double z = norm_quantile(0.5 + 0.5 * cfg.level);
  long long rank = 0;
  for (const auto& r : rows) {
    ++rank;
    CopulaSpec cs;
    cs.family = r.request.family;
    cs.rotation = r.request.rotation;
    cs.df = cfg.spec.copula.df;
    const std::string label = cs.label();
    const std::string links = std::string(1, link_code(r.request.treatment_link)) + link_code(r.request.outcome_link);
    const std::string status = r.failed ? "failed: " + r.error : (r.converged ? "ok" : "not converged");
    if (r.failed) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      grid.rows.push_back({rank, label, links, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, nan, 0LL, status});
      continue;
    }
    grid.rows.push_back({rank, label, links, r.sate.value, r.sate.ci_low, r.sate.ci_high, r.tau.tau, r.tau.ci_low,
                         r.tau.ci_high, r.tau.theta, r.aic, r.bic, r.loglik, r.edf, (long long)r.converged, status});
    const FittedJointModel& fm = *r.model;
    const std::string mlabel = label + " " + links;
    const Eigen::VectorXd se = fm.standard_errors();
    const JointDesign& d = *fm.design;
    for (int e = 0; e < 2; ++e) {
      const EquationDesign& eq = e == 0 ? d.treatment : d.outcome;
      const int off = e == 0 ? 0 : d.p1();
      const std::string ename = e == 0 ? "treatment" : "outcome";
      for (int j = 0; j < eq.n_parametric(); ++j) {
        const double b = fm.coefficients(off + j);
        const double s = se(off + j);
        const double zz = b / s;
        coef.rows.push_back({mlabel, ename, eq.column_names[static_cast<std::size_t>(j)], b, s, zz,
                             2.0 * norm_cdf(-std::abs(zz))});
      }
      for (std::size_t k = 0; k < eq.smooths.size(); ++k) {
        const auto& sb = eq.smooths[k];
        const int start = off + sb.start;
        const int len = sb.term.n_coef();
        const Eigen::VectorXd b = fm.coefficients.segment(start, len);
        const Eigen::MatrixXd v = fm.covariance.block(start, start, len, len);
        const std::size_t si = (e == 0 ? 0 : d.treatment.smooths.size()) + k;
        const double edf = fm.edf_per_smooth[si].second;
        double stat = 0.0;
        int rdf = 1;
        const double p = wald_p(b, v, edf, &stat, &rdf);
        smooth.rows.push_back({mlabel, ename, sb.term.covariate, edf, fm.lambda[si], stat, (long long)rdf, p});
        Eigen::VectorXd xs(cfg.smooth_points);
        for (int g = 0; g < cfg.smooth_points; ++g)
          xs(g) = sb.term.lower() + (sb.term.upper() - sb.term.lower()) * g / (cfg.smooth_points - 1.0);
        const Eigen::MatrixXd bm = smooth_design(sb.term, xs);
        const Eigen::VectorXd fit = bm * b;
        for (int g = 0; g < cfg.smooth_points; ++g) {
          const double sd = std::sqrt(std::max(0.0, bm.row(g).dot(v * bm.row(g).transpose())));
          eval.rows.push_back({mlabel, ename, sb.term.covariate, xs(g), fit(g), fit(g) - z * sd, fit(g) + z * sd});
        }
      }
    }
    if (fm.theta_free) {
      const Eigen::Index last = fm.coefficients.size() - 1;
      const double b = fm.coefficients(last);
      coef.rows.push_back({mlabel, "copula", "theta*", b, se(last), b / se(last), 2.0 * norm_cdf(-std::abs(b / se(last)))});
    }
  }
  write_table(a.out, "analyze_grid", grid, mh);
  write_table(a.out, "analyze_coefficients", coef, mh);
  write_table(a.out, "analyze_smooth_terms", smooth, mh);
  write_table(a.out, "analyze_smooth_eval", eval, mh);

  // one-stage logistic of the outcome, smooth covariates entering linearly
  {
    ModelSpec lin = cfg.spec;
    for (auto* mg : {&lin.treatment, &lin.outcome}) {
      for (const auto& s : mg->smooth_terms) mg->parametric_terms.push_back(s);
      mg->smooth_terms.clear();
    }
    const JointDesign dl = assemble_design(data, lin);
    Table one{{"equation", "term", "estimate", "se", "z", "p_value"}, {}};
    const GlmFit g = fit_glm_binary(dl.y2, dl.outcome.x, Link::Logit);
    for (std::size_t j = 0; j < dl.outcome.column_names.size(); ++j) {
      const double b = g.coefficients(static_cast<Eigen::Index>(j));
      const double s = std::sqrt(g.covariance(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j)));
      one.rows.push_back({std::string("outcome"), dl.outcome.column_names[j], b, s, b / s, 2.0 * norm_cdf(-std::abs(b / s))});
    }
    write_table(a.out, "analyze_one_stage", one, mh);
  }
  m.finished = now_utc();
  write_manifest(a.out, m);
  log << "analyze: " << rows.size() << " models; best " << rows.front().request.label() << " (AIC "
      << rows.front().aic << ")\n";
  return 0;
}

namespace {

struct LoadedTable {
  std::vector<std::string> columns;
  nlohmann::json rows;
  std::string manifest_hash;
};

std::string md_value(const nlohmann::json& v) {
  if (v.is_null()) return "NA";
  if (v.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v.get<double>());
    return buf;
  }
  if (v.is_number()) return v.dump();
  std::string s = v.get<std::string>();
  std::replace(s.begin(), s.end(), '|', '/');
  return s;
}

void md_table(std::ostream& o, const LoadedTable& t, std::size_t max_rows = 200) {
  o << "|";
  for (const auto& c : t.columns) o << " " << c << " |";
  o << "\n|";
  for (std::size_t j = 0; j < t.columns.size(); ++j) o << "---|";
  o << "\n";
  std::size_t k = 0;
  for (const auto& r : t.rows) {
    if (k++ >= max_rows) {
      o << "\n(" << t.rows.size() - max_rows << " more rows in the CSV)\n";
      break;
    }
    o << "|";
    for (const auto& v : r) o << " " << md_value(v) << " |";
    o << "\n";
  }
  o << "\n";
}

}  // namespace

int cmd_report(const CliArgs& a, std::ostream& log) {
  const fs::path dir(a.out);
  if (!fs::exists(dir)) throw ConfigError("output directory '" + a.out + "' does not exist");
  std::map<std::string, nlohmann::json> manifests;
  std::set<std::string> csvs;
  std::set<std::string> jsons;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (name.size() > 14 && name.compare(name.size() - 14, 14, "_manifest.json") == 0) {
      std::ifstream in(e.path());
      try {
        manifests[name.substr(0, name.size() - 14)] = nlohmann::json::parse(in);
      } catch (const std::exception&) {
        throw DataError("cannot parse manifest '" + name + "'");
      }
    } else if (e.path().extension() == ".csv") {
      csvs.insert(e.path().stem().string());
    } else if (e.path().extension() == ".json") {
      jsons.insert(e.path().stem().string());
    }
  }
  std::ofstream o((dir / "report.md").string());
  if (manifests.empty() && csvs.empty()) {
    o << "# Report\n\nnothing to report\n";
    log << "nothing to report\n";
    return 0;
  }
  std::set<std::string> hashes;
  for (const auto& [cmd, mj] : manifests) hashes.insert(mj.value("manifest_hash", ""));
  std::vector<std::string> problems;
  auto load = [&](const std::string& name) -> std::optional<LoadedTable> {
    if (!csvs.count(name) && !jsons.count(name)) return std::nullopt;
    if (!jsons.count(name)) {
      problems.push_back(name + ".csv has no JSON sidecar");
      return std::nullopt;
    }
    if (!csvs.count(name)) problems.push_back(name + ".json has no CSV table");
    std::ifstream in((dir / (name + ".json")).string());
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const std::exception&) {
      problems.push_back(name + ".json is not valid JSON");
      return std::nullopt;
    }
    LoadedTable t;
    t.columns = j.value("columns", std::vector<std::string>{});
    t.rows = j.value("rows", nlohmann::json::array());
    t.manifest_hash = j.value("manifest_hash", "");
    if (!hashes.count(t.manifest_hash)) problems.push_back(name + " refers to manifest " + t.manifest_hash + ", not found");
    return t;
  };

  o << "# Report\n\n";
  if (!manifests.empty()) {
    o << "## Runs\n\n| command | manifest | seed | version | config hash | started | finished |\n|---|---|---|---|---|---|---|\n";
    for (const auto& [cmd, mj] : manifests) {
      o << "| " << cmd << " | " << mj.value("manifest_hash", "") << " | " << mj.value("seed", 0ULL) << " | "
        << mj.value("version", "") << " | " << mj.value("config_hash", "") << " | " << mj.value("started", "") << " | "
        << mj.value("finished", "") << " |\n";
    }
    o << "\n";
    for (const auto& [cmd, mj] : manifests) {
      if (!mj.contains("details") || mj["details"].empty()) continue;
      o << "Details (" << cmd << "):";
      for (const auto& [k, v] : mj["details"].items()) o << " " << k << "=" << v.get<std::string>() << ";";
      o << "\n\n";
    }
  }
  const std::vector<std::pair<std::string, std::string>> sections{
      {"sim1_curve", "Simulation 1: SATE curve"},
      {"sim1_selection", "Simulation 1: selection rates"},
      {"sim2_bias", "Simulation 2: signed bias of the treatment coefficient"},
      {"sim2_2sps", "Simulation 2: two-stage predictor substitution"},
      {"analyze_grid", "Model grid (ranked by AIC, then BIC)"},
      {"analyze_coefficients", "Parametric coefficients"},
      {"analyze_smooth_terms", "Smooth terms"},
      {"analyze_one_stage", "One-stage logistic outcome model"},
  };
  int shown = 0;
  for (const auto& [name, title] : sections) {
    auto t = load(name);
    if (!t) continue;
    ++shown;
    o << "## " << title << "\n\nmanifest " << t->manifest_hash << "\n\n";
    md_table(o, *t);
  }
  if (auto t = load("analyze_smooth_eval")) {
    o << "## Smooth function evaluations\n\nmanifest " << t->manifest_hash << "; " << t->rows.size()
      << " points in analyze_smooth_eval.csv\n\n";
    ++shown;
  }
  for (const auto& [cmd, mj] : manifests) {
    bool has_table = false;
    for (const auto& c : csvs) has_table |= c.rfind(cmd + "_", 0) == 0;
    if (!has_table) problems.push_back("manifest for '" + cmd + "' has no tables");
  }
  if (!problems.empty()) {
    o << "## Missing inputs\n\n";
    for (const auto& p : problems) o << "- " << p << "\n";
    o << "\n";
  }
  log << "report: " << shown << " sections written to " << (dir / "report.md").string() << "\n";
  for (const auto& p : problems) log << "missing: " << p << "\n";
  return 0;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Recursive bivariate binary copula models: simulation studies and data analysis"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  CliArgs args;
  std::uint64_t seed = 0;
  int replicates = 0;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--out", args.out, "output directory")->capture_default_str();
    sub->add_option("--jobs", args.jobs, "worker threads")->check(CLI::PositiveNumber)->capture_default_str();
  };
  auto* sim1 = app.add_subcommand("sim1", "simulation study 1: SATE curve against the DGP truth");
  auto* sim2 = app.add_subcommand("sim2", "simulation study 2: bias of the treatment coefficient");
  auto* analyze = app.add_subcommand("analyze", "fit a copula x link grid to a CSV dataset");
  auto* report = app.add_subcommand("report", "summarize the outputs in a directory");
  CLI::Option* seed_opt[3];
  CLI::Option* rep_opt[2];
  int k = 0;
  for (auto* sub : {sim1, sim2}) {
    sub->add_option("--scenario", args.scenario, "scenario file (YAML)")->required();
    seed_opt[k] = sub->add_option("--seed", seed, "override the scenario seed");
    rep_opt[k] = sub->add_option("--replicates", replicates, "override the replicate count")->check(CLI::PositiveNumber);
    ++k;
    common(sub);
  }
  sim1->add_option("--n-oracle", args.n_oracle, "Monte Carlo size of the truth")->capture_default_str();
  sim1->add_flag("!--no-figure", args.figure, "skip the SVG figure");
  analyze->add_option("--data", args.data, "input CSV")->required();
  analyze->add_option("--scenario,--config", args.scenario, "model configuration (YAML)")->required();
  seed_opt[2] = analyze->add_option("--seed", seed, "override the configuration seed");
  analyze->add_option("--families", args.families, "comma separated copulas, e.g. gaussian,joe,clayton180");
  analyze->add_option("--links", args.links, "comma separated link pairs, e.g. pp,pl");
  common(analyze);
  report->add_option("--out", args.out, "directory to summarize")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n" << app.help();
    return 1;
  }
  for (auto* o : seed_opt) {
    if (o->count()) args.seed = seed;
  }
  for (auto* o : rep_opt) {
    if (o->count()) args.replicates = replicates;
  }
  try {
    if (sim1->parsed()) return cmd_sim1(args, out);
    if (sim2->parsed()) return cmd_sim2(args, out);
    if (analyze->parsed()) return cmd_analyze(args, out);
    if (report->parsed()) return cmd_report(args, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 3;
  }
  return 1;
}

}  // namespace copjoint
