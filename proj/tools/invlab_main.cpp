// SPDX-License-Identifier: Apache-2.0
//
// Command line front end: invert / edit / bench / report.
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "invlab/config.hpp"

namespace {

using namespace invlab;

// Values at or below 1e-10 print as 0.0e0 so exact identities read as exact.
std::string format_metric(double v) {
  if (std::abs(v) <= 1e-10) return "0.0e0";
  return format_double(v);
}

struct Overrides {
  std::vector<std::pair<std::string, std::string>> entries;
};

void add_override_flags(CLI::App* cmd, Overrides& ov) {
  static const char* kPaths[] = {
      "schedule.T",      "schedule.beta_start", "schedule.beta_end", "schedule.kind",
      "suite.n",         "suite.seeds",         "suite.master_seed", "suite.dims",
      "suite.K",         "suite.separation",    "suite.blob_radius", "edit.rho",
      "edit.tau_fraction", "edit.single_branch_variables", "guidance.w_inv", "guidance.w_fwd",
      "output.path",     "output.format",       "metrics.ssim_window"};
  for (const char* path : kPaths) {
    cmd->add_option_function<std::string>(
        std::string("--") + path,
        [&ov, path](const std::string& v) { ov.entries.emplace_back(path, v); },
        "override config field " + std::string(path));
  }
  cmd->add_option_function<std::string>(
      "--set",
      [&ov](const std::string& kv) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw CLI::ValidationError("--set expects key=value");
        ov.entries.emplace_back(kv.substr(0, eq), kv.substr(eq + 1));
      },
      "override config field, e.g. --set edit.rho=0.8")
      ->take_all();
}

RunConfig load_config(const std::string& path, const Overrides& ov) {
  RunConfig cfg = RunConfig::from_file(path);
  for (const auto& [k, v] : ov.entries) cfg.apply_override(k, v);
  return cfg;
}

const Scenario& find_scenario(const std::vector<Scenario>& suite, const std::string& id) {
  for (const auto& sc : suite) {
    if (sc.id == id) return sc;
  }
  throw ConfigError("unknown scenario id '" + id + "'");
}

void print_metrics_line(const std::string& scenario_id, const std::string& task,
                        const RunSpec& rs, const MetricsRow& m) {
  std::cout << scenario_id << " task=" << task << " method=" << to_string(rs.correction.method)
            << " w_inv=" << format_double(rs.w_inv) << " w_fwd=" << format_double(rs.w_fwd);
  if (rs.correction.method == Method::null_var) {
    std::cout << " opt_iters=" << rs.correction.opt_iters;
  }
  if (rs.correction.method == Method::direct) {
    std::cout << " scale=" << format_double(rs.correction.scale)
              << " interval=" << rs.correction.interval
              << " target_mode=" << to_string(rs.correction.target_mode);
  }
  if (task == "edit") {
    std::cout << " rho=" << format_double(rs.rho);
  }
  std::cout << " mse_all=" << format_metric(m.mse_all) << " mse_bg=" << format_metric(m.mse_bg)
            << " psnr_bg=" << format_metric(m.psnr_bg) << " ssim_bg=" << format_metric(m.ssim_bg)
            << " structure_distance=" << format_metric(m.structure_distance)
            << " fidelity_whole=" << format_metric(m.fidelity_whole)
            << " fidelity_region=" << format_metric(m.fidelity_region) << "\n";
}

void dump_trajectories(const std::string& path, const std::string& scenario_id,
                       const std::vector<Trajectory>& trajs) {
  nlohmann::json root;
  root["scenario_id"] = scenario_id;
  root["version"] = kVersion;
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& tr : trajs) {
    nlohmann::json jt;
    jt["label"] = to_string(tr.label);
    jt["w"] = tr.w;
    jt["cond"] = tr.cond.label;
    nlohmann::json states = nlohmann::json::array();
    for (const auto& st : tr.states) {
      nlohmann::json grid = nlohmann::json::array();
      for (Eigen::Index r = 0; r < st.rows(); ++r) {
        nlohmann::json rowj = nlohmann::json::array();
        for (Eigen::Index c = 0; c < st.cols(); ++c) rowj.push_back(st(r, c));
        grid.push_back(std::move(rowj));
      }
      states.push_back(std::move(grid));
    }
    jt["states"] = std::move(states);
    arr.push_back(std::move(jt));
  }
  root["trajectories"] = std::move(arr);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << root.dump() << '\n';
}

MetricsRow compute_metrics(const Scenario& sc, const Latent& out, const Condition& fidelity_cond,
                           int ssim_window) {
  MetricsRow m;
  const double peak = sc.z0.maxCoeff() - sc.z0.minCoeff();
  m.mse_all = mse(sc.z0, out);
  m.mse_bg = mse(sc.z0, out, &sc.mask, true);
  m.psnr_bg = psnr(sc.z0, out, &sc.mask, true, peak);
  m.ssim_bg = ssim(sc.z0, out, &sc.mask, true, ssim_window, (0.01 * peak) * (0.01 * peak),
                   (0.03 * peak) * (0.03 * peak));
  m.structure_distance = structure_distance(sc.z0, out, 4);
  m.fidelity_whole = edit_fidelity(out, sc.model, fidelity_cond);
  m.fidelity_region = edit_fidelity(out, sc.model, fidelity_cond, &sc.mask);
  return m;
}

int cmd_invert(const std::string& config_path, const Overrides& ov, const std::string& scenario_id,
               const std::string& dump_path) {
  const RunConfig cfg = load_config(config_path, ov);
  const NoiseSchedule s = cfg.make_schedule();
  const auto suite = generate_full_suite(cfg.suite);
  const Scenario& sc = find_scenario(suite, scenario_id);
  const Condition null_cond = Condition::null_of(sc.model.component_count());

  if (cfg.methods.empty()) throw ConfigError("methods: at least one method required");

  for (const auto& entry : cfg.methods) {
    for (const double wi : cfg.w_inv) {
      for (const double wf : cfg.w_fwd) {
        RunSpec rs;
        rs.task = "reconstruct";
        rs.correction = entry.correction;
        rs.w_inv = wi;
        rs.w_fwd = wf;
        const Trajectory traj = invert(sc.z0, sc.c_src, null_cond, wi, sc.model, s);
        const Latent z0_hat =
            reconstruct(traj, sc.c_src, null_cond, wf, rs.correction, sc.model, s).z0_hat;
        print_metrics_line(sc.id, "reconstruct", rs,
                           compute_metrics(sc, z0_hat, sc.c_src, cfg.ssim_window));
      }
    }
  }

  if (!dump_path.empty()) {
    const Trajectory traj = invert(sc.z0, sc.c_src, null_cond, cfg.w_inv.front(), sc.model, s);
    const Trajectory unguided = sample(traj.state(s.step_count()), sc.c_src, null_cond, 1.0, sc.model, s);
    const Trajectory guided =
        sample(traj.state(s.step_count()), sc.c_src, null_cond, cfg.w_fwd.front(), sc.model, s);
    dump_trajectories(dump_path, sc.id, {traj, unguided, guided});
  }
  return 0;
}

int cmd_edit(const std::string& config_path, const Overrides& ov, const std::string& scenario_id,
             bool same_target, const std::string& dump_path) {
  const RunConfig cfg = load_config(config_path, ov);
  const NoiseSchedule s = cfg.make_schedule();
  const auto suite = generate_full_suite(cfg.suite);
  const Scenario& sc = find_scenario(suite, scenario_id);
  const Condition& c_tgt = same_target ? sc.c_src : sc.c_tgt;
  const Condition null_cond = Condition::null_of(sc.model.component_count());

  if (cfg.methods.empty()) throw ConfigError("methods: at least one method required");

  for (const auto& entry : cfg.methods) {
    for (const double wi : cfg.w_inv) {
      for (const double wf : cfg.w_fwd) {
        RunSpec rs;
        rs.task = "edit";
        rs.correction = entry.correction;
        rs.rho = cfg.rho;
        rs.tau_fraction = cfg.tau_fraction;
        rs.single_branch_variables = cfg.single_branch_variables;
        rs.w_inv = wi;
        rs.w_fwd = wf;
        EditConfig ec{cfg.rho, cfg.tau_fraction, rs.correction, cfg.single_branch_variables};
        const EditResult er = edit(sc.z0, sc.c_src, c_tgt, ec, wi, wf, sc.model, s);
        print_metrics_line(sc.id, "edit", rs, compute_metrics(sc, er.z0_tgt, c_tgt, cfg.ssim_window));
      }
    }
  }

  if (!dump_path.empty()) {
    const Trajectory traj = invert(sc.z0, sc.c_src, null_cond, cfg.w_inv.front(), sc.model, s);
    dump_trajectories(dump_path, sc.id, {traj});
  }
  return 0;
}

struct GroupStats {
  long n = 0;
  long errors = 0;
  MetricsRow sum;
};

void print_summary(const std::vector<ReportRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, GroupStats> groups;
  for (const auto& r : rows) {
    std::string key = r.task + " method=" + r.method;
    if (r.method == "null_var") key += " opt_iters=" + std::to_string(r.opt_iters);
    if (r.method == "direct") {
      key += " scale=" + format_double(r.scale) + " interval=" + std::to_string(r.interval) +
             " target_mode=" + r.target_mode;
    }
    key += " w_inv=" + format_double(r.w_inv) + " w_fwd=" + format_double(r.w_fwd);
    if (groups.find(key) == groups.end()) order.push_back(key);
    GroupStats& g = groups[key];
    if (!r.ok()) {
      ++g.errors;
      continue;
    }
    ++g.n;
    g.sum.mse_all += r.metrics.mse_all;
    g.sum.mse_bg += r.metrics.mse_bg;
    g.sum.psnr_bg += r.metrics.psnr_bg;
    g.sum.ssim_bg += r.metrics.ssim_bg;
    g.sum.structure_distance += r.metrics.structure_distance;
    g.sum.fidelity_whole += r.metrics.fidelity_whole;
    g.sum.fidelity_region += r.metrics.fidelity_region;
  }

  std::printf("%-72s %5s %8s %10s %10s %8s %8s %10s %10s %10s\n", "config", "runs", "errors",
              "mse_all", "mse_bg", "psnr_bg", "ssim_bg", "struct", "fid_whole", "fid_region");
  for (const auto& key : order) {
    const GroupStats& g = groups.at(key);
    const double n = g.n > 0 ? static_cast<double>(g.n) : 1.0;
    std::printf("%-72s %5ld %8ld %10.4g %10.4g %8.4g %8.4g %10.4g %10.4g %10.4g\n", key.c_str(),
                g.n, g.errors, g.sum.mse_all / n, g.sum.mse_bg / n, g.sum.psnr_bg / n,
                g.sum.ssim_bg / n, g.sum.structure_distance / n, g.sum.fidelity_whole / n,
                g.sum.fidelity_region / n);
  }
}

int cmd_bench(const std::string& config_path, const Overrides& ov, int workers) {
  const RunConfig cfg = load_config(config_path, ov);
  if (cfg.methods.empty()) throw ConfigError("methods: at least one method required");
  const NoiseSchedule s = cfg.make_schedule();
  const auto suite = generate_full_suite(cfg.suite);
  const auto configs = cfg.expand_configs();
  const auto rows = run_bench(suite, configs, workers, s, cfg.ssim_window);
  write_report(rows, cfg.out_path, cfg.out_format);
  std::cout << kVersion << ": " << rows.size() << " rows -> " << cfg.out_path << "\n";
  print_summary(rows);
  return 0;
}

int cmd_report(const std::string& csv_path) {
  const auto rows = read_report_csv(csv_path);
  std::cout << kVersion << ": " << rows.size() << " rows from " << csv_path << "\n";
  print_summary(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analytic laboratory for diffusion inversion and editing"};
  app.set_version_flag("--version", std::string(invlab::kVersion));
  app.require_subcommand(0, 1);

  std::string config_path, scenario_id, dump_path, csv_path;
  bool same_target = false;
  int workers = static_cast<int>(std::thread::hardware_concurrency());
  if (workers < 1) workers = 1;
  Overrides ov;

  CLI::App* invert_cmd = app.add_subcommand("invert", "reconstruction metrics for one scenario");
  invert_cmd->add_option("config", config_path, "run-config JSON path")->required();
  invert_cmd->add_option("--scenario", scenario_id, "scenario id, e.g. s000_r0")->required();
  invert_cmd->add_option("--dump-trajectories", dump_path, "write trajectory JSON to this path");
  add_override_flags(invert_cmd, ov);

  CLI::App* edit_cmd = app.add_subcommand("edit", "edit metrics for one scenario");
  edit_cmd->add_option("config", config_path, "run-config JSON path")->required();
  edit_cmd->add_option("--scenario", scenario_id, "scenario id, e.g. s000_r0")->required();
  edit_cmd->add_flag("--same-target", same_target, "use the source condition as the target");
  edit_cmd->add_option("--dump-trajectories", dump_path, "write trajectory JSON to this path");
  add_override_flags(edit_cmd, ov);

  CLI::App* bench_cmd = app.add_subcommand("bench", "run the full sweep and write the report");
  bench_cmd->add_option("config", config_path, "run-config JSON path")->required();
  bench_cmd->add_option("--workers", workers, "worker thread count");
  add_override_flags(bench_cmd, ov);

  CLI::App* report_cmd = app.add_subcommand("report", "re-summarize an existing CSV report");
  report_cmd->add_option("csv", csv_path, "report CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (invert_cmd->parsed()) return cmd_invert(config_path, ov, scenario_id, dump_path);
    if (edit_cmd->parsed()) return cmd_edit(config_path, ov, scenario_id, same_target, dump_path);
    if (bench_cmd->parsed()) return cmd_bench(config_path, ov, workers);
    if (report_cmd->parsed()) return cmd_report(csv_path);
    std::cout << app.help() << "\n";
    return 0;
  } catch (const invlab::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (...) {
    std::cerr << "error: unknown failure\n";
    return 3;
  }
}
