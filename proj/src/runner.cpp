#include "kernelrn/runner.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <system_error>

#include "kernelrn/moments.hpp"

namespace kernelrn {

using nlohmann::ordered_json;

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

// JSON has no infinities; they become null.
ordered_json jnum(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(nullptr); }

ordered_json jvec(const std::vector<double>& v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(jnum(x));
  return a;
}

int severity(TestOutcome t) {
  switch (t) {
    case TestOutcome::pass:
      return 0;
    case TestOutcome::inconclusive:
      return 1;
    case TestOutcome::fail:
      return 2;
  }
  return 1;
}

TestOutcome worst(TestOutcome a, TestOutcome b) { return severity(a) >= severity(b) ? a : b; }

int exit_for(TestOutcome t) {
  switch (t) {
    case TestOutcome::pass:
      return kExitPass;
    case TestOutcome::fail:
      return kExitFail;
    case TestOutcome::inconclusive:
      return kExitInconclusive;
  }
  return kExitInconclusive;
}

TestOutcome outcome_of(VnVerdict v) {
  switch (v) {
    case VnVerdict::certified_pass:
      return TestOutcome::pass;
    case VnVerdict::certified_fail:
      return TestOutcome::fail;
    case VnVerdict::inconclusive:
      return TestOutcome::inconclusive;
  }
  return TestOutcome::inconclusive;
}

TestOutcome outcome_of(DensityVerdict v) {
  switch (v) {
    case DensityVerdict::dominated:
      return TestOutcome::pass;
    case DensityVerdict::not_dominated:
      return TestOutcome::fail;
    case DensityVerdict::inconclusive:
      return TestOutcome::inconclusive;
  }
  return TestOutcome::inconclusive;
}

ordered_json envelope(const RunConfig& cfg, const char* command) {
  ordered_json r;
  r["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  r["command"] = command;
  r["seed"] = cfg.seed;
  r["samples"] = cfg.samples;
  r["config"] = config_to_json(cfg);
  return r;
}

ordered_json ratio_json(const RatioVerdict& v) {
  ordered_json rows = ordered_json::array();
  for (std::size_t m = 0; m < v.flags.size(); ++m) {
    rows.push_back({{"m", m},
                    {"ratio", jnum(v.ratio[m])},
                    {"margin", jnum(v.margin[m])},
                    {"margin_se", jnum(v.margin_se[m])},
                    {"flag", to_string(v.flags[m])}});
  }
  return {{"z", v.z},
          {"overall", to_string(v.overall)},
          {"first_failing_m", v.first_failing ? ordered_json(*v.first_failing) : ordered_json(nullptr)},
          {"steps", rows}};
}

ordered_json asymptotic_json(const std::vector<AsymptoticRow>& rows) {
  ordered_json a = ordered_json::array();
  for (const auto& r : rows) {
    a.push_back({{"m", r.m},
                 {"measured", jnum(r.measured)},
                 {"se", jnum(r.se)},
                 {"limit", jnum(r.limit)},
                 {"deviation_over_se", jnum(r.deviation_over_se)}});
  }
  return a;
}

// m,value,se,limit,ratio,margin,pass; empty cells where a column does not apply.
std::string moments_csv(const MomentSequence& seq, const std::vector<double>* limits, const RatioVerdict* ratio) {
  std::string s = "m,value,se,limit,ratio,margin,pass\n";
  for (std::size_t m = 0; m < seq.values.size(); ++m) {
    s += std::to_string(m) + "," + num(seq.values[m]) + "," + num(seq.se[m]) + ",";
    if (limits) s += num((*limits)[m]);
    s += ",";
    if (ratio && m < ratio->flags.size()) {
      s += num(ratio->ratio[m]) + "," + num(ratio->margin[m]) + "," + to_string(ratio->flags[m]);
    } else {
      s += ",,";
    }
    s += "\n";
  }
  return s;
}

std::vector<double> limits_of(const std::vector<AsymptoticRow>& rows) {
  std::vector<double> out;
  for (const auto& r : rows) out.push_back(r.limit);
  return out;
}

ordered_json bounds_json(const CreationNormBound& b) {
  return {{"lower", jnum(b.lower)},
          {"upper", jnum(b.upper)},
          {"exact", b.exact ? jnum(*b.exact) : ordered_json(nullptr)},
          {"exact_reason", b.exact ? ordered_json(b.exact_reason) : ordered_json(nullptr)},
          {"depth", b.depth},
          {"converged", b.converged}};
}

}  // namespace

RunOutcome run_moments(const RunConfig& cfg) {
  const auto& a = cfg.analysis;
  MomentRequest req;
  req.max_order = a.max_order;
  req.c = true;
  req.d = a.d_sequence;
  if (a.subalgebra.kind() == SubalgebraSpec::Kind::blocks) req.block_sizes = a.subalgebra.sizes();
  std::cerr << "moments: sampling " << cfg.samples << " draws of " << ensemble_name(cfg.ensemble) << "\n";
  const MomentRun run = run_moment_pass(cfg.ensemble, req, cfg.samples, cfg.seed, {cfg.workers});
  const auto tau = ensemble_tau(cfg.ensemble);

  RunOutcome out;
  out.report = envelope(cfg, "moments");
  ordered_json res;

  const auto c_ratio = ratio_test(*run.c, a.z);
  TestOutcome overall = c_ratio.overall;
  {
    ordered_json c = {{"values", jvec(run.c->values)}, {"se", jvec(run.c->se)}, {"ratio_test", ratio_json(c_ratio)}};
    std::vector<double> lim;
    if (tau) {
      const auto rows = asymptotic_report(*run.c, *tau);
      c["asymptotic"] = asymptotic_json(rows);
      lim = limits_of(rows);
    }
    res["c"] = c;
    out.csv_files.emplace_back("moments.csv", moments_csv(*run.c, tau ? &lim : nullptr, &c_ratio));
  }
  if (run.d) {
    ordered_json d = {{"values", jvec(run.d->values)}, {"se", jvec(run.d->se)}};
    std::vector<double> lim;
    if (tau) {
      const auto rows = asymptotic_report(*run.d, *tau);
      d["asymptotic"] = asymptotic_json(rows);
      lim = limits_of(rows);
    }
    res["d"] = d;
    out.csv_files.emplace_back("moments_d.csv", moments_csv(*run.d, tau ? &lim : nullptr, nullptr));
    ordered_json diff = {{"values", jvec(run.c_minus_d)}, {"se", jvec(run.c_minus_d_se)}};
    if (tau) diff["asymptotic"] = asymptotic_json(difference_report(run, *tau));
    res["c_minus_d"] = diff;
  }
  if (!run.blocks.empty()) {
    ordered_json blocks = ordered_json::array();
    ordered_json failing = ordered_json::array();
    std::optional<std::size_t> worst_block;
    double worst_ratio = -std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < run.blocks.size(); ++r) {
      const auto& seq = run.blocks[r];
      const auto rt = ratio_test(seq, a.z);
      overall = worst(overall, rt.overall);
      blocks.push_back({{"block", r + 1},
                        {"size", a.subalgebra.sizes()[r]},
                        {"values", jvec(seq.values)},
                        {"se", jvec(seq.se)},
                        {"ratio_test", ratio_json(rt)}});
      if (rt.overall == TestOutcome::fail) failing.push_back(r + 1);
      for (double q : rt.ratio) {
        if (q > worst_ratio) {
          worst_ratio = q;
          worst_block = r + 1;
        }
      }
      out.csv_files.emplace_back("moments_block" + std::to_string(r + 1) + ".csv", moments_csv(seq, nullptr, &rt));
    }
    res["blocks"] = blocks;
    res["failing_blocks"] = failing;
    res["worst_block"] = worst_block ? ordered_json(*worst_block) : ordered_json(nullptr);
    res["worst_block_ratio"] = jnum(worst_ratio);
  }
  res["verdict"] = to_string(overall);
  out.report["results"] = res;
  out.exit_code = exit_for(overall);
  out.report["verdict"] = to_string(overall);
  out.report["exit_code"] = out.exit_code;
  return out;
}

RunOutcome run_rn(const RunConfig& cfg) {
  const auto& a = cfg.analysis;
  EstimateOptions eo;
  eo.workers = cfg.workers;
  std::cerr << "rn: estimating kernel to word length " << a.max_order + 1 << " from " << cfg.samples << " draws\n";
  const auto k = estimate_kernel(cfg.ensemble, a.max_order + 1, cfg.samples, cfg.seed, eo);
  std::cerr << "rn: shift density at order " << a.max_order << "\n";
  const auto sd = shift_density(k, a.subalgebra, a.max_order, a.enforce, a.tolerances, a.z);
  const auto& rep = sd.report;

  // density_tol on the density scale is density_tol * lambda_min+(G) on the Gram scale
  const double order_tol = a.tolerances.density_tol * rep.lambda_min_positive;
  const double order_band = a.z * (sd.gram.se + sd.shifted.se);
  const auto ot = order_test(sd.gram.matrix, sd.shifted.matrix, order_tol);
  TestOutcome order_outcome;
  if (ot.passes) {
    order_outcome = TestOutcome::pass;
  } else if (ot.min_eig_of_difference < -order_tol - order_band) {
    order_outcome = TestOutcome::fail;
  } else {
    order_outcome = TestOutcome::inconclusive;
  }
  const TestOutcome density_outcome = outcome_of(rep.verdict);
  const bool agree = order_outcome == density_outcome;

  RunOutcome out;
  out.report = envelope(cfg, "rn");
  ordered_json res;
  res["order"] = a.max_order;
  res["kernel"] = {{"generators", k.generators()}, {"max_len", k.max_len()}, {"dim", k.dim()},
                   {"words", sd.gram.words.size()}};
  res["density"] = {{"eigenvalues", jvec(rep.eigenvalues)},
                    {"lambda_min", jnum(rep.lambda_min)},
                    {"lambda_max", jnum(rep.lambda_max)},
                    {"violation_margin", jnum(rep.violation_margin())},
                    {"reconstruction_residual", jnum(rep.reconstruction_residual)},
                    {"support_leak", jnum(rep.support_leak)},
                    {"rank", rep.rank},
                    {"lambda_min_positive", jnum(rep.lambda_min_positive)},
                    {"tolerances",
                     {{"rank_tol", rep.tolerances.rank_tol},
                      {"psd_clip_tol", rep.tolerances.psd_clip_tol},
                      {"density_tol", rep.tolerances.density_tol},
                      {"leak_tol", rep.tolerances.leak_tol},
                      {"mc_band", jnum(rep.tolerances.mc_band)}}},
                    {"verdict", to_string(rep.verdict)}};
  res["gram"] = {{"size", sd.gram.matrix.rows()},
                 {"enforce", to_string(sd.gram.enforce)},
                 {"se", jnum(sd.gram.se)},
                 {"min_eig", jnum(sd.gram.min_eig)},
                 {"max_eig", jnum(sd.gram.max_eig)}};
  res["shifted_gram"] = {{"se", jnum(sd.shifted.se)},
                         {"min_eig", jnum(sd.shifted.min_eig)},
                         {"max_eig", jnum(sd.shifted.max_eig)}};
  res["order_test"] = {{"min_eig_of_difference", jnum(ot.min_eig_of_difference)},
                       {"tol", jnum(order_tol)},
                       {"mc_band", jnum(order_band)},
                       {"verdict", to_string(order_outcome)}};
  res["verdicts_agree"] = agree;
  TestOutcome overall = density_outcome;
  if (!agree) {
    res["discrepancy"] = "order test says " + to_string(order_outcome) + ", density says " + to_string(rep.verdict);
    overall = TestOutcome::inconclusive;
  }
  out.report["results"] = res;
  out.exit_code = exit_for(overall);
  out.report["verdict"] = agree ? to_string(rep.verdict) : std::string("discrepancy");
  out.report["exit_code"] = out.exit_code;

  std::string csv = "index,eigenvalue\n";
  for (std::size_t i = 0; i < rep.eigenvalues.size(); ++i) csv += std::to_string(i) + "," + num(rep.eigenvalues[i]) + "\n";
  out.csv_files.emplace_back("density.csv", csv);
  return out;
}

RunOutcome run_vn(const RunConfig& cfg) {
  if (!cfg.vn) throw std::invalid_argument("the vn command needs a vn section in the config");
  const auto& a = cfg.analysis;
  const auto& vc = *cfg.vn;
  const std::size_t n = dimension(cfg.ensemble);
  VnOptions opt;
  opt.depth = vc.depth;
  opt.z = a.z;
  opt.workers = cfg.workers;
  const ComplexMatrix y = build_y(vc.y, n, a.subalgebra);
  std::cerr << "vn: sampling " << cfg.samples << " draws under the " << a.subalgebra.name() << " subalgebra\n";
  const auto r = vn_check(cfg.ensemble, vc.polynomial, a.subalgebra, y, cfg.samples, cfg.seed, opt);

  RunOutcome out;
  out.report = envelope(cfg, "vn");
  ordered_json res;
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> lhs_eig(r.lhs, Eigen::EigenvaluesOnly);
  std::vector<double> diag(static_cast<std::size_t>(r.lhs.rows()));
  for (Eigen::Index i = 0; i < r.lhs.rows(); ++i) diag[static_cast<std::size_t>(i)] = r.lhs(i, i).real();
  res["bounds"] = bounds_json(r.bounds);
  res["check"] = {{"lhs_lambda_max", jnum(lhs_eig.eigenvalues()(lhs_eig.eigenvalues().size() - 1))},
                  {"lhs_se", jnum(r.lhs_se)},
                  {"lhs_diagonal", jvec(diag)},
                  {"comparison_lambda_max", jnum(r.lambda_max)},
                  {"block_lambda_max", jvec(r.block_lambda_max)},
                  {"block_se", jvec(r.block_se)},
                  {"y_rank", r.y_rank},
                  {"z", r.z},
                  {"bound_tol", r.bound_tol},
                  {"verdict", to_string(r.verdict)}};
  TestOutcome overall = outcome_of(r.verdict);
  if (vc.vector) {
    const auto v = vector_bound_check(cfg.ensemble, vc.polynomial, *vc.vector, cfg.samples, cfg.seed, opt);
    res["vector"] = {{"lhs", jnum(v.lhs)},
                     {"se", jnum(v.se)},
                     {"v_norm2", jnum(v.v_norm2)},
                     {"rhs_lower", jnum(v.rhs_lower)},
                     {"rhs_upper", jnum(v.rhs_upper)},
                     {"verdict", to_string(v.verdict)}};
    overall = worst(overall, outcome_of(v.verdict));
  }
  out.report["results"] = res;
  out.exit_code = exit_for(overall);
  out.report["verdict"] = to_string(overall);
  out.report["exit_code"] = out.exit_code;
  return out;
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << contents;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw std::runtime_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

void write_outputs(const RunOutcome& outcome, const OutputConfig& output, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
  if (output.json) write_atomic(dir / "report.json", outcome.report.dump(2) + "\n");
  if (output.csv) {
    for (const auto& [name, contents] : outcome.csv_files) write_atomic(dir / name, contents);
  }
}

}  // namespace kernelrn
