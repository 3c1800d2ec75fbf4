#include "copjoint/studies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "copjoint/comparators.hpp"
#include "copjoint/effects.hpp"
#include "copjoint/parallel.hpp"

namespace copjoint {

SimFitData sim_fit_data(const SimDataset& d, const Dichotomized& dich) {
  SimFitData f;
  for (Eigen::Index i = 0; i < dich.y2.size(); ++i) {
    if (!std::isnan(dich.y2(i))) f.rows.push_back(static_cast<int>(i));
  }
  const auto m = static_cast<Eigen::Index>(f.rows.size());
  f.x1.resize(m, 7);
  f.x2.resize(m, 7);
  f.y1.resize(m);
  f.y2.resize(m);
  f.time.resize(m);
  f.event.resize(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const int i = f.rows[static_cast<std::size_t>(a)];
    f.x1(a, 0) = 1.0;
    for (int j = 0; j < 6; ++j) f.x1(a, j + 1) = d.x(i, kTreatmentCols[j]);
    f.x2(a, 0) = 1.0;
    f.x2(a, 1) = d.y1(i);
    for (int j = 0; j < 5; ++j) f.x2(a, j + 2) = d.x(i, kOutcomeCols[j]);
    f.y1(a) = d.y1(i);
    f.y2(a) = dich.y2(i);
    f.time(a) = d.time(i);
    f.event(a) = d.event(i);
  }
  return f;
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

MethodSummary summarize(const std::vector<double>& est, double truth) {
  MethodSummary m;
  double s = 0.0;
  double s2 = 0.0;
  for (double v : est) {
    if (std::isnan(v)) {
      ++m.n_failed;
      continue;
    }
    ++m.n_ok;
    s += v - truth;
    s2 += (v - truth) * (v - truth);
  }
  if (m.n_ok > 0) {
    m.mean_bias = s / m.n_ok;
    m.rmse = std::sqrt(s2 / m.n_ok);
    if (m.n_ok > 1) m.sd = std::sqrt(std::max(0.0, (s2 - m.n_ok * m.mean_bias * m.mean_bias) / (m.n_ok - 1)));
  } else {
    m.mean_bias = m.sd = m.rmse = kNaN;
  }
  return m;
}

struct Sim2Task {
  std::vector<double> one, two, cop, missing;
  double realized = 0.0;
};

}  // namespace

Sim2Result run_sim2(const SimScenario& s, const StudyOptions& opt) {
  s.validate();
  Sim2Result out;
  out.scenario = s;
  out.truth = s.gamma(0);
  for (double c : s.censoring_target) out.c_max.push_back(pilot_c_max(s, c));
  const std::size_t nn = s.n.size();
  const std::size_t nc = s.censoring_target.size();
  const std::size_t nq = s.cutoff_quantiles.size();
  const auto reps = static_cast<std::size_t>(s.replicates);
  std::vector<Sim2Task> tasks(nn * nc * reps);

  parallel_for(tasks.size(), opt.jobs, [&](std::size_t t) {
    const std::size_t r = t % reps;
    const std::size_t ci = (t / reps) % nc;
    const std::size_t ni = t / (reps * nc);
    const SimDataset d = simulate(s, s.n[ni], out.c_max[ci], r, ni * 100 + ci);
    Sim2Task& task = tasks[t];
    task.realized = d.realized_censoring;
    for (std::size_t q = 0; q < nq; ++q) {
      double one = kNaN, two = kNaN, cop = kNaN;
      const Dichotomized dich = dichotomize(d.time, d.event, empirical_cutoff(d.time, s.cutoff_quantiles[q]));
      task.missing.push_back(dich.n_missing);
      const SimFitData f = sim_fit_data(d, dich);
      try {
        const CoxFit cf = fit_cox_ph(f.time, f.event, f.x2.rightCols(6));
        if (cf.converged) one = -cf.coefficients(0);
      } catch (const std::exception&) {
      }
      try {
        Eigen::MatrixXd x2s(f.x2.rows(), 6);
        x2s.col(0) = f.x2.col(0);
        x2s.rightCols(5) = f.x2.rightCols(5);
        const TwoStageFit ts = fit_2sps(f.y2, f.y1, f.x1, x2s);
        if (ts.stage2.converged) two = ts.treatment_coefficient;
      } catch (const std::exception&) {
      }
      try {
        auto des = std::make_shared<const JointDesign>(make_design(f.x1, f.x2, f.y1, f.y2, Link::Probit, Link::Probit, 1));
        const FittedJointModel fm = fit_design(des, CopulaSpec{});
        if (fm.converged) cop = fm.gamma();
      } catch (const std::exception&) {
      }
      task.one.push_back(one);
      task.two.push_back(two);
      task.cop.push_back(cop);
    }
  });

  for (std::size_t ni = 0; ni < nn; ++ni) {
    for (std::size_t ci = 0; ci < nc; ++ci) {
      double realized = 0.0;
      for (std::size_t r = 0; r < reps; ++r) realized += tasks[(ni * nc + ci) * reps + r].realized;
      for (std::size_t q = 0; q < nq; ++q) {
        std::vector<double> one, two, cop;
        double miss = 0.0;
        for (std::size_t r = 0; r < reps; ++r) {
          const Sim2Task& t = tasks[(ni * nc + ci) * reps + r];
          one.push_back(t.one[q]);
          two.push_back(t.two[q]);
          cop.push_back(t.cop[q]);
          miss += t.missing[q];
        }
        Sim2Cell cell;
        cell.n = s.n[ni];
        cell.censoring_target = s.censoring_target[ci];
        cell.realized_censoring = realized / static_cast<double>(reps);
        cell.cutoff_quantile = s.cutoff_quantiles[q];
        cell.mean_missing = miss / static_cast<double>(reps);
        cell.one_stage = summarize(one, out.truth);
        cell.two_stage = summarize(two, out.truth);
        cell.copula = summarize(cop, out.truth);
        if (cell.copula.n_failed > 0)
          out.warnings.push_back(std::to_string(cell.copula.n_failed) + " copula fits excluded at n=" +
                                 std::to_string(cell.n) + ", censoring " + std::to_string(cell.censoring_target) +
                                 ", cutoff " + std::to_string(cell.cutoff_quantile));
        out.cells.push_back(cell);
      }
    }
  }
  return out;
}

namespace {

struct Sim1Task {
  std::vector<double> sate, tau;
  std::vector<std::vector<double>> z;  // per cutoff, per coefficient
};

}  // namespace

Sim1Result run_sim1(const SimScenario& s, const StudyOptions& opt) {
  s.validate();
  Sim1Result out;
  out.scenario = s;
  std::vector<double> c_max;
  for (double c : s.censoring_target) c_max.push_back(pilot_c_max(s, c));
  std::vector<OracleCurve> oracle;
  for (double c : s.censoring_target) oracle.push_back(true_sate_oracle(s, s.cutoff_quantiles, opt.n_oracle, c));

  const std::size_t nn = s.n.size();
  const std::size_t nc = s.censoring_target.size();
  const std::size_t nq = s.cutoff_quantiles.size();
  const auto reps = static_cast<std::size_t>(s.replicates);
  std::vector<Sim1Task> tasks(nn * nc * reps);

  parallel_for(tasks.size(), opt.jobs, [&](std::size_t t) {
    const std::size_t r = t % reps;
    const std::size_t ci = (t / reps) % nc;
    const std::size_t ni = t / (reps * nc);
    const SimDataset d = simulate(s, s.n[ni], c_max[ci], r, ni * 100 + ci);
    Sim1Task& task = tasks[t];
    for (std::size_t q = 0; q < nq; ++q) {
      double v = kNaN, tau = kNaN;
      std::vector<double> z(13, kNaN);
      try {
        const Dichotomized dich = dichotomize(d.time, d.event, empirical_cutoff(d.time, s.cutoff_quantiles[q]));
        const SimFitData f = sim_fit_data(d, dich);
        auto des = std::make_shared<const JointDesign>(make_design(f.x1, f.x2, f.y1, f.y2, Link::Probit, Link::Probit, 1));
        const FittedJointModel fm = fit_design(des, CopulaSpec{});
        if (fm.converged) {
          v = sate(fm);
          tau = theta_to_tau(fm.copula);
          const Eigen::VectorXd se = fm.standard_errors();
          // slopes only: x1..x6 then Y1, x3, x7..x10
          for (int j = 0; j < 6; ++j) z[static_cast<std::size_t>(j)] = fm.coefficients(1 + j) / se(1 + j);
          for (int j = 0; j < 6; ++j) z[static_cast<std::size_t>(6 + j)] = fm.coefficients(8 + j) / se(8 + j);
          z[12] = fm.coefficients(14) / se(14);
        }
      } catch (const std::exception&) {
      }
      task.sate.push_back(v);
      task.tau.push_back(tau);
      task.z.push_back(z);
    }
  });

  std::vector<std::string> names{"T:x1", "T:x2", "T:x3", "T:x4", "T:x5", "T:x6", "O:Y1",
                                 "O:x3", "O:x7", "O:x8", "O:x9", "O:x10", "theta*"};
  std::vector<double> nonzero;
  for (int j = 0; j < 6; ++j) nonzero.push_back(s.beta(j) != 0.0 ? 1.0 : 0.0);
  for (int j = 0; j < 6; ++j) nonzero.push_back(s.gamma(j) != 0.0 ? 1.0 : 0.0);
  nonzero.push_back(s.rho != 0.0 ? 1.0 : 0.0);

  for (std::size_t ni = 0; ni < nn; ++ni) {
    for (std::size_t ci = 0; ci < nc; ++ci) {
      for (std::size_t q = 0; q < nq; ++q) {
        std::vector<double> vals;
        double tau_sum = 0.0;
        Sim1Point p;
        p.n = s.n[ni];
        p.censoring_target = s.censoring_target[ci];
        p.quantile = s.cutoff_quantiles[q];
        SelectionRates sel;
        sel.n = p.n;
        sel.censoring_target = p.censoring_target;
        sel.quantile = p.quantile;
        sel.names = names;
        sel.truth_nonzero = nonzero;
        sel.rate.assign(names.size(), 0.0);
        for (std::size_t r = 0; r < reps; ++r) {
          const Sim1Task& t = tasks[(ni * nc + ci) * reps + r];
          if (std::isnan(t.sate[q])) {
            ++p.n_failed;
            continue;
          }
          vals.push_back(t.sate[q]);
          tau_sum += t.tau[q];
          for (std::size_t j = 0; j < names.size(); ++j) sel.rate[j] += std::abs(t.z[q][j]) > 1.959964 ? 1.0 : 0.0;
        }
        p.n_ok = static_cast<int>(vals.size());
        p.oracle = oracle[ci].sate[q];
        p.oracle_se = oracle[ci].se[q];
        if (!vals.empty()) {
          double m = 0.0;
          for (double v : vals) m += v;
          m /= static_cast<double>(vals.size());
          double ss = 0.0;
          for (double v : vals) ss += (v - m) * (v - m);
          p.mean_sate = m;
          p.sd = vals.size() > 1 ? std::sqrt(ss / static_cast<double>(vals.size() - 1)) : 0.0;
          p.lo = empirical_quantile(vals, 0.025);
          p.hi = empirical_quantile(vals, 0.975);
          p.mean_tau = tau_sum / static_cast<double>(vals.size());
          for (auto& rt : sel.rate) rt /= static_cast<double>(vals.size());
        } else {
          p.mean_sate = p.lo = p.hi = p.sd = p.mean_tau = kNaN;
        }
        if (p.n_failed > 0)
          out.warnings.push_back(std::to_string(p.n_failed) + " replicate fits excluded at n=" + std::to_string(p.n) +
                                 ", quantile " + std::to_string(p.quantile));
        out.points.push_back(p);
        out.selection.push_back(sel);
      }
    }
  }
  return out;
}

}  // namespace copjoint
