#include "baxq/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <functional>
#include <sstream>

#include "baxq/io.hpp"
#include "json.hpp"

namespace baxq {

namespace {

using ordered_json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

double elapsed_sec(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string iso_timestamp() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

ordered_json config_json(const RunConfig& cfg) {
  ordered_json j = ordered_json::object();
  std::istringstream is(dump_config(cfg));
  std::string line;
  while (std::getline(is, line)) {
    const size_t eq = line.find('=');
    if (eq != std::string::npos) j[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return j;
}

ordered_json report_skeleton(const std::string& command, const RunConfig& cfg) {
  ordered_json j = ordered_json::object();
  j["timestamp"] = iso_timestamp();
  j["runtime_sec"] = 0.0;
  j["command"] = command;
  j["verdict"] = "error";
  j["config"] = config_json(cfg);
  return j;
}

void finish_report(ordered_json& j, const std::string& path,
                   Clock::time_point start) {
  j["runtime_sec"] = elapsed_sec(start);
  write_text_file(path, j.dump(2) + "\n");
}

std::string combine_verdicts(bool any_error, bool any_fail) {
  if (any_error) return "error";
  return any_fail ? "fail" : "pass";
}

ordered_json relation_entry(const RelationReport& r,
                            const std::string& curve_csv) {
  ordered_json e = ordered_json::object();
  e["name"] = r.name;
  e["verdict"] = r.pass ? "pass" : "fail";
  e["tol"] = r.tol;
  e["worst_resid"] = r.worst_resid;
  e["worst_structure"] = r.worst_structure;
  ordered_json m = ordered_json::object();
  for (const auto& [k, v] : r.metrics) m[k] = v;
  e["metrics"] = m;
  e["notes"] = r.notes;
  if (!curve_csv.empty()) e["curve_csv"] = curve_csv;
  return e;
}

ordered_json error_entry(const std::string& name, const std::string& what) {
  ordered_json e = ordered_json::object();
  e["name"] = name;
  e["verdict"] = "error";
  e["error"] = what;
  return e;
}

RelationReport bethe_as_report(const BetheResult& res) {
  RelationReport r;
  r.name = "bethe";
  r.tol = 1e-6;
  r.worst_resid = res.worst_resid;
  r.pass = res.counts_ok && res.worst_resid <= r.tol;
  int roots = 0;
  for (const BetheSector& e : res.entries) roots += static_cast<int>(e.roots.size());
  r.metrics["sectors"] = static_cast<double>(res.entries.size());
  r.metrics["roots_found"] = static_cast<double>(roots);
  r.metrics["counts_ok"] = res.counts_ok ? 1.0 : 0.0;
  r.notes = res.notes;
  return r;
}

struct NamedCheck {
  std::string name;
  std::function<RelationReport(OperatorCache&)> run;
};

std::vector<NamedCheck> build_checks(const RunConfig& cfg) {
  std::vector<NamedCheck> out;
  const int N = cfg.params.trunc_N;
  const int plus_N = std::max(48, N);
  for (const std::string& rel : cfg.relations) {
    if (rel == "commutativity") {
      out.push_back({"commutativity",
                     [](OperatorCache& c) { return check_commutativity(c); }});
    } else if (rel == "tq") {
      out.push_back({"tq_minus_raw",
                     [](OperatorCache& c) { return check_tq(c, -1, false); }});
      out.push_back({"tq_minus_primed",
                     [](OperatorCache& c) { return check_tq(c, -1, true); }});
      out.push_back({"tq_plus_raw",
                     [](OperatorCache& c) { return check_tq(c, +1, false); }});
      out.push_back({"tq_plus_primed",
                     [](OperatorCache& c) { return check_tq(c, +1, true); }});
    } else if (rel == "factorization") {
      for (double j : {0.5, 1.0})
        out.push_back({"factorization_j" + std::to_string(j),
                       [j, N](OperatorCache& c) {
                         return check_factorization(c, j, N);
                       }});
    } else if (rel == "wronskian") {
      for (double j : {-0.5, 0.5})
        out.push_back({"wronskian_j" + std::to_string(j),
                       [j, N](OperatorCache& c) {
                         return check_wronskian(c, j, N);
                       }});
    } else if (rel == "plus") {
      for (double j : {0.5, 1.0})
        out.push_back({"plus_decomposition_j" + std::to_string(j),
                       [j, plus_N](OperatorCache& c) {
                         return check_plus_decomposition(c, j, plus_N);
                       }});
    } else if (rel == "fusion") {
      for (double j : {0.0, 0.5, 1.0})
        for (int dir : {-1, +1}) {
          const std::string name =
              std::string(dir < 0 ? "fusion_minus_j" : "fusion_plus_j") +
              std::to_string(j);
          out.push_back({name, [j, dir](OperatorCache& c) {
                           return check_fusion(c, j, dir);
                         }});
        }
    } else if (rel == "boundary") {
      out.push_back({"boundary_region",
                     [](OperatorCache& c) { return boundary_region_check(c); }});
    } else if (rel == "bethe") {
      out.push_back({"bethe", [](OperatorCache& c) {
                       return bethe_as_report(extract_bethe_roots(c));
                     }});
    } else {
      throw ModelError("unknown relation: " + rel);
    }
  }
  return out;
}

bool needs_infinite_aux(const RunConfig& cfg) {
  if (cfg.out_matrices) return true;
  for (const std::string& rel : cfg.relations)
    if (rel != "fusion") return true;
  return false;
}

std::string matrix_filename(const std::string& tag, const ModelParams& p,
                            Complex lambda) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "op_%s_L%d_q%s_phi%.6g_N%d_lam%s.txt",
                tag.c_str(), p.L, short_complex(p.q).c_str(), p.phi, p.trunc_N,
                short_complex(lambda).c_str());
  return sanitize_token(buf);
}

void dump_operator_matrices(OperatorCache& cache, const std::string& out_dir,
                            ordered_json& files) {
  const ModelParams& p = cache.params();
  const Complex lam = p.lambda_grid.front();
  const std::vector<std::pair<std::string, const QuantumOperator*>> ops = {
      {"Z", &cache.Z(lam)},
      {"Q_minus", &cache.Qminus(lam)},
      {"Q_plus", &cache.Qplus(lam)},
  };
  for (const auto& [tag, op] : ops) {
    const std::string name = matrix_filename(tag, p, lam);
    write_matrix_text(out_dir + "/" + name, op->mat);
    files.push_back(name);
  }
}

struct VerifySummary {
  std::string verdict = "error";
  double worst = 0.0;
};

VerifySummary verify_into(const RunConfig& cfg, const std::string& out_dir) {
  const Clock::time_point start = Clock::now();
  cfg.params.validate(needs_infinite_aux(cfg));
  const std::vector<NamedCheck> checks = build_checks(cfg);
  ensure_dir(out_dir);

  ordered_json report = report_skeleton("verify", cfg);
  ordered_json entries = ordered_json::array();
  OperatorCache cache(cfg.params);

  bool any_fail = false, any_error = false;
  double worst = 0.0;
  for (const NamedCheck& chk : checks) {
    try {
      const RelationReport r = chk.run(cache);
      std::string csv;
      if (!r.points.empty()) {
        csv = curve_filename(r.name, cfg.params);
        write_residual_csv(out_dir + "/" + csv, r);
      }
      entries.push_back(relation_entry(r, csv));
      worst = std::max(worst, r.worst_resid);
      if (!r.pass) any_fail = true;
    } catch (const ModelError& e) {
      entries.push_back(error_entry(chk.name, e.what()));
      any_error = true;
    }
  }
  report["relations"] = entries;

  if (cfg.out_matrices) {
    ordered_json files = ordered_json::array();
    try {
      dump_operator_matrices(cache, out_dir, files);
    } catch (const ModelError& e) {
      entries.push_back(error_entry("matrix_output", e.what()));
      report["relations"] = entries;
      any_error = true;
    }
    report["matrix_files"] = files;
  }

  VerifySummary s;
  s.verdict = combine_verdicts(any_error, any_fail);
  s.worst = worst;
  report["verdict"] = s.verdict;
  report["worst_resid"] = worst;
  finish_report(report, out_dir + "/report.json", start);
  return s;
}

// Convergence verdict for an error study: the tail half of the curve must
// fall strictly at every step and the final point must improve on the first.
// Values at the numerical floor are exempt.
bool monotone_decreasing(const std::vector<double>& v) {
  if (v.size() < 2) return true;
  for (size_t i = std::max<size_t>(1, v.size() / 2); i < v.size(); ++i) {
    if (v[i] < 1e-12) continue;
    if (!(v[i] < v[i - 1])) return false;
  }
  if (v.back() >= 1e-12 && !(v.back() < v.front())) return false;
  return true;
}

ordered_json limit_entry(const std::string& name, bool pass,
                         const std::map<std::string, double>& metrics,
                         const std::string& csv) {
  ordered_json e = ordered_json::object();
  e["name"] = name;
  e["verdict"] = pass ? "pass" : "fail";
  ordered_json m = ordered_json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  e["metrics"] = m;
  e["curve_csv"] = csv;
  return e;
}

int limits_into(const RunConfig& cfg, const std::string& out_dir) {
  const Clock::time_point start = Clock::now();
  cfg.params.validate(true);
  if (cfg.j_list.empty()) throw ModelError("limits requires a nonempty j_list");
  ensure_dir(out_dir);

  ordered_json report = report_skeleton("limits", cfg);
  ordered_json entries = ordered_json::array();
  const ModelParams& p = cfg.params;
  const Complex lam0 = p.lambda_grid.front();

  bool all_pass = true, any_error = false;
  OperatorCache cache(p);

  // Entrywise convergence of the raising coefficients of the finite modules
  // to the oscillator coefficients, at unit spectral parameter.
  try {
    // The entrywise comparison is level-resolved with error ~ |q|^{4j+2-2k},
    // so the window must stay small for moderate labels; eight levels keeps
    // every listed j in the convergent regime.
    const std::vector<RepLimitRow> rows = rep_limit_check(
        p.q, Complex(1.0, 0.0), std::min(p.trunc_N, 8), cfg.j_list);
    std::vector<double> ep, em;
    std::vector<LimitRow> as_limit;
    for (const RepLimitRow& r : rows) {
      ep.push_back(r.err_plus);
      em.push_back(r.err_minus);
      LimitRow lr;
      lr.j = r.j;
      lr.err_plus = r.err_plus;
      lr.err_minus = r.err_minus;
      as_limit.push_back(lr);
    }
    const bool pass = monotone_decreasing(ep) && monotone_decreasing(em);
    const std::string csv = curve_filename("limit_rep", p);
    write_limit_csv(out_dir + "/" + csv, as_limit, false);
    entries.push_back(limit_entry(
        "rep_limit", pass,
        {{"err_plus_first", ep.front()},
         {"err_plus_final", ep.back()},
         {"err_minus_first", em.front()},
         {"err_minus_final", em.back()}},
        csv));
    all_pass = all_pass && pass;
  } catch (const ModelError& e) {
    entries.push_back(error_entry("rep_limit", e.what()));
    any_error = true;
  }

  // Scaled extended operators against the two Q-families.
  try {
    const std::vector<LimitRow> rows =
        limit_study_zplus(cache, cfg.j_list, lam0, p.trunc_N);
    std::vector<double> ep, em;
    for (const LimitRow& r : rows) {
      ep.push_back(r.err_plus);
      em.push_back(r.err_minus);
    }
    const bool pass = monotone_decreasing(ep) && monotone_decreasing(em);
    const std::string csv = curve_filename("limit_zplus", p);
    write_limit_csv(out_dir + "/" + csv, rows, false);
    entries.push_back(limit_entry(
        "zplus_limit", pass,
        {{"err_plus_first", ep.front()},
         {"err_plus_final", ep.back()},
         {"err_minus_first", em.front()},
         {"err_minus_final", em.back()}},
        csv));
    all_pass = all_pass && pass;
  } catch (const ModelError& e) {
    entries.push_back(error_entry("zplus_limit", e.what()));
    any_error = true;
  }

  // Scaled finite-spin operators: one sector class per Q-family, the S = 0
  // class against the two-dimensional span.
  try {
    const std::vector<LimitRow> rows = limit_study_z(cache, cfg.j_list, lam0);
    std::vector<double> ep, em, ez, zr;
    for (const LimitRow& r : rows) {
      ep.push_back(r.err_plus);
      em.push_back(r.err_minus);
      ez.push_back(r.err_zero);
      zr.push_back(std::abs(r.zero_ratio - 1.0));
    }
    // The mixed-sector column only exists at even length. The weight ratio
    // oscillates around its unit-modulus limit, so it gets a convergence cap
    // rather than a monotonicity requirement.
    const bool has_s0 = (p.L % 2 == 0);
    const bool pass = monotone_decreasing(ep) && monotone_decreasing(em) &&
                      (!has_s0 || (monotone_decreasing(ez) && zr.back() <= 0.2));
    const std::string csv = curve_filename("limit_z", p);
    write_limit_csv(out_dir + "/" + csv, rows, true);
    entries.push_back(limit_entry(
        "z_limit", pass,
        {{"err_plus_final", ep.back()},
         {"err_minus_final", em.back()},
         {"err_zero_final", ez.back()},
         {"zero_ratio_final_dist", zr.back()}},
        csv));
    all_pass = all_pass && pass;
  } catch (const ModelError& e) {
    entries.push_back(error_entry("z_limit", e.what()));
    any_error = true;
  }

  report["studies"] = entries;
  report["verdict"] = combine_verdicts(any_error, !all_pass);
  finish_report(report, out_dir + "/report.json", start);
  return (!any_error && all_pass) ? 0 : 1;
}

int spectrum_into(const RunConfig& cfg, const std::string& out_dir) {
  const Clock::time_point start = Clock::now();
  cfg.params.validate(true);
  ensure_dir(out_dir);

  ordered_json report = report_skeleton("spectrum", cfg);
  ordered_json entries = ordered_json::array();
  const ModelParams& p = cfg.params;
  const Complex lam0 = p.lambda_grid.front();

  bool pass = false;
  try {
    OperatorCache cache(p);
    const QuantumOperator& ref = cache.Z(lam0);
    std::vector<const QuantumOperator*> members = {&cache.Qminus(lam0),
                                                   &cache.Qplus(lam0)};
    std::vector<std::string> names = {"Q_minus", "Q_plus"};
    if (p.lambda_grid.size() > 1) {
      members.push_back(&cache.Z(p.lambda_grid[1]));
      names.push_back("Z_second_point");
    }
    const JointSpectrum js = joint_spectrum(ref, members, 1e-8);
    double leak = 0.0;
    for (const SectorSpectrum& s : js.sectors) leak = std::max(leak, s.max_leakage);
    pass = leak <= 1e-6;

    {
      char buf[96];
      std::snprintf(buf, sizeof buf, "spectrum_Z_L%d_q%s_phi%.6g_N%d.csv", p.L,
                    short_complex(p.q).c_str(), p.phi, p.trunc_N);
      const std::string csv = sanitize_token(buf);
      write_spectrum_csv(out_dir + "/" + csv, js, -1);
      ordered_json e = ordered_json::object();
      e["name"] = "Z";
      e["verdict"] = pass ? "pass" : "fail";
      e["metrics"] = ordered_json::object({{"max_leakage", leak}});
      e["curve_csv"] = csv;
      entries.push_back(e);
    }
    for (size_t mi = 0; mi < members.size(); ++mi) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "spectrum_%s_L%d_q%s_phi%.6g_N%d.csv",
                    names[mi].c_str(), p.L, short_complex(p.q).c_str(), p.phi,
                    p.trunc_N);
      const std::string csv = sanitize_token(buf);
      write_spectrum_csv(out_dir + "/" + csv, js, static_cast<int>(mi));
      ordered_json e = ordered_json::object();
      e["name"] = names[mi];
      e["verdict"] = pass ? "pass" : "fail";
      e["curve_csv"] = csv;
      entries.push_back(e);
    }

    if (cfg.out_matrices) {
      ordered_json files = ordered_json::array();
      dump_operator_matrices(cache, out_dir, files);
      report["matrix_files"] = files;
    }

    report["operators"] = entries;
    report["verdict"] = pass ? "pass" : "fail";
  } catch (const ModelError& e) {
    entries.push_back(error_entry("spectrum", e.what()));
    report["operators"] = entries;
    report["verdict"] = "error";
  }
  finish_report(report, out_dir + "/report.json", start);
  return (report["verdict"] == "pass") ? 0 : 1;
}

int bethe_into(const RunConfig& cfg, const std::string& out_dir) {
  const Clock::time_point start = Clock::now();
  cfg.params.validate(true);
  ensure_dir(out_dir);

  ordered_json report = report_skeleton("bethe", cfg);
  ordered_json entries = ordered_json::array();
  const ModelParams& p = cfg.params;

  int code = 1;
  try {
    OperatorCache cache(p);
    const BetheResult res = extract_bethe_roots(cache);
    for (const BetheSector& s : res.entries) {
      ordered_json e = ordered_json::object();
      e["sector"] = s.S;
      e["eigenindex"] = s.eigenindex;
      e["expected_roots"] = s.expected;
      e["found_roots"] = static_cast<int>(s.roots.size());
      e["count_ok"] = s.count_ok;
      double worst = 0.0;
      for (double r : s.tq_resid) worst = std::max(worst, r);
      e["worst_tq_resid"] = worst;
      entries.push_back(e);
    }
    const std::string csv = curve_filename("bethe_roots", p);
    write_bethe_csv(out_dir + "/" + csv, res);
    report["sectors"] = entries;
    report["roots_csv"] = csv;
    report["worst_resid"] = res.worst_resid;
    report["notes"] = res.notes;
    const bool pass = res.counts_ok && res.worst_resid <= 1e-6;
    report["verdict"] = pass ? "pass" : "fail";
    code = pass ? 0 : 1;
  } catch (const ModelError& e) {
    entries.push_back(error_entry("bethe", e.what()));
    report["sectors"] = entries;
    report["verdict"] = "error";
  }
  finish_report(report, out_dir + "/report.json", start);
  return code;
}

int sweep_into(const RunConfig& cfg, const std::string& out_dir) {
  const Clock::time_point start = Clock::now();
  if (cfg.sweep_key.empty() || cfg.sweep_values.empty())
    throw ModelError("sweep requires sweep_key and sweep_values");
  if (cfg.sweep_key == "sweep_key" || cfg.sweep_key == "sweep_values")
    throw ModelError("cannot sweep over the sweep controls themselves");
  ensure_dir(out_dir);

  ordered_json report = report_skeleton("sweep", cfg);
  ordered_json entries = ordered_json::array();
  std::ostringstream summary;
  summary << "value,verdict,worst_resid\n";

  bool all_pass = true;
  for (const std::string& value : cfg.sweep_values) {
    ordered_json e = ordered_json::object();
    e["value"] = value;
    const std::string sub =
        out_dir + "/" + sanitize_token(cfg.sweep_key + "_" + value);
    try {
      RunConfig sub_cfg = cfg;
      sub_cfg.sweep_key.clear();
      sub_cfg.sweep_values.clear();
      apply_override(sub_cfg, cfg.sweep_key, value);
      const VerifySummary vs = verify_into(sub_cfg, sub);
      e["verdict"] = vs.verdict;
      e["worst_resid"] = vs.worst;
      e["report"] = sub + "/report.json";
      summary << value << "," << vs.verdict << "," << vs.worst << "\n";
      if (vs.verdict != "pass") all_pass = false;
    } catch (const ModelError& err) {
      e["verdict"] = "error";
      e["error"] = err.what();
      summary << value << ",error,\n";
      all_pass = false;
    }
    entries.push_back(e);
  }

  report["values"] = entries;
  bool any_error = false, any_fail = false;
  for (const auto& e : entries) {
    const std::string v = e["verdict"].get<std::string>();
    if (v == "error") any_error = true;
    if (v == "fail") any_fail = true;
  }
  report["verdict"] = combine_verdicts(any_error, any_fail);
  write_text_file(out_dir + "/sweep_summary.csv", summary.str());
  finish_report(report, out_dir + "/report.json", start);
  return all_pass ? 0 : 1;
}

}  // namespace

RunOutcome run_command(const std::string& command, const RunConfig& cfg,
                       const std::string& out_dir) {
  RunOutcome out;
  out.report_path = out_dir + "/report.json";
  if (command == "verify") {
    const VerifySummary s = verify_into(cfg, out_dir);
    out.exit_code = (s.verdict == "pass") ? 0 : 1;
  } else if (command == "sweep") {
    out.exit_code = sweep_into(cfg, out_dir);
  } else if (command == "limits") {
    out.exit_code = limits_into(cfg, out_dir);
  } else if (command == "spectrum") {
    out.exit_code = spectrum_into(cfg, out_dir);
  } else if (command == "bethe") {
    out.exit_code = bethe_into(cfg, out_dir);
  } else {
    throw ModelError("unknown command: " + command);
  }
  return out;
}

}  // namespace baxq
