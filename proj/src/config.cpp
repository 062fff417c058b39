// SPDX-License-Identifier: Apache-2.0
#include "invlab/config.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace invlab {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const auto& k : allowed) {
      if (it.key() == k) {
        known = true;
        break;
      }
    }
    if (!known) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

CorrectionConfig parse_correction(const json& obj, const std::string& where) {
  reject_unknown_keys(obj, {"task", "method", "opt_iters", "opt_step", "scale", "interval",
                            "target_mode"},
                      where);
  CorrectionConfig cc;
  if (!obj.contains("method")) throw ConfigError(where + ": missing 'method'");
  cc.method = method_from_string(obj.at("method").get<std::string>());
  cc.opt_iters = get_or<int>(obj, "opt_iters", cc.opt_iters, where);
  cc.opt_step = get_or<double>(obj, "opt_step", cc.opt_step, where);
  cc.scale = get_or<double>(obj, "scale", cc.scale, where);
  cc.interval = get_or<int>(obj, "interval", cc.interval, where);
  if (obj.contains("target_mode")) {
    cc.target_mode = target_mode_from_string(obj.at("target_mode").get<std::string>());
  }
  cc.validate();
  return cc;
}

std::vector<double> parse_double_list(const std::string& value, const std::string& key) {
  std::vector<double> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      out.push_back(std::stod(item));
    } catch (...) {
      throw ConfigError(key + ": cannot parse '" + item + "' as a number");
    }
  }
  if (out.empty()) throw ConfigError(key + ": empty list");
  return out;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown_keys(root, {"schedule", "suite", "methods", "edit", "guidance", "output",
                             "metrics"},
                      "config");

  RunConfig cfg;
  if (root.contains("schedule")) {
    const json& s = root.at("schedule");
    reject_unknown_keys(s, {"T", "beta_start", "beta_end", "kind"}, "schedule");
    cfg.schedule_T = get_or<int>(s, "T", cfg.schedule_T, "schedule");
    cfg.beta_start = get_or<double>(s, "beta_start", cfg.beta_start, "schedule");
    cfg.beta_end = get_or<double>(s, "beta_end", cfg.beta_end, "schedule");
    if (s.contains("kind")) cfg.schedule_kind = schedule_kind_from_string(s.at("kind").get<std::string>());
  }
  if (root.contains("suite")) {
    const json& s = root.at("suite");
    reject_unknown_keys(s, {"n", "seeds", "master_seed", "dims", "K", "separation", "blob_radius"},
                        "suite");
    cfg.suite.n = get_or<int>(s, "n", cfg.suite.n, "suite");
    cfg.suite.seeds = get_or<int>(s, "seeds", cfg.suite.seeds, "suite");
    cfg.suite.master_seed = get_or<std::uint64_t>(s, "master_seed", cfg.suite.master_seed, "suite");
    if (s.contains("dims")) {
      const json& d = s.at("dims");
      if (!d.is_array() || d.size() != 2) throw ConfigError("suite.dims: expected [rows, cols]");
      cfg.suite.rows = d.at(0).get<int>();
      cfg.suite.cols = d.at(1).get<int>();
    }
    cfg.suite.K = get_or<int>(s, "K", cfg.suite.K, "suite");
    cfg.suite.separation = get_or<double>(s, "separation", cfg.suite.separation, "suite");
    cfg.suite.blob_radius = get_or<double>(s, "blob_radius", cfg.suite.blob_radius, "suite");
  }
  if (root.contains("methods")) {
    const json& ms = root.at("methods");
    if (!ms.is_array()) throw ConfigError("methods: expected an array");
    for (std::size_t i = 0; i < ms.size(); ++i) {
      const std::string where = "methods[" + std::to_string(i) + "]";
      MethodEntry entry;
      entry.task = get_or<std::string>(ms.at(i), "task", "edit", where);
      if (entry.task != "reconstruct" && entry.task != "edit") {
        throw ConfigError(where + ".task: expected 'reconstruct' or 'edit'");
      }
      entry.correction = parse_correction(ms.at(i), where);
      cfg.methods.push_back(std::move(entry));
    }
  }
  if (root.contains("edit")) {
    const json& e = root.at("edit");
    reject_unknown_keys(e, {"rho", "tau_fraction", "single_branch_variables", "target_modes"},
                        "edit");
    cfg.rho = get_or<double>(e, "rho", cfg.rho, "edit");
    cfg.tau_fraction = get_or<double>(e, "tau_fraction", cfg.tau_fraction, "edit");
    cfg.single_branch_variables =
        get_or<bool>(e, "single_branch_variables", cfg.single_branch_variables, "edit");
    if (e.contains("target_modes")) {
      for (const auto& tm : e.at("target_modes")) {
        cfg.target_mode_sweep.push_back(target_mode_from_string(tm.get<std::string>()));
      }
    }
  }
  if (root.contains("guidance")) {
    const json& g = root.at("guidance");
    reject_unknown_keys(g, {"w_inv", "w_fwd"}, "guidance");
    if (g.contains("w_inv")) cfg.w_inv = g.at("w_inv").get<std::vector<double>>();
    if (g.contains("w_fwd")) cfg.w_fwd = g.at("w_fwd").get<std::vector<double>>();
  }
  if (root.contains("output")) {
    const json& o = root.at("output");
    reject_unknown_keys(o, {"path", "format"}, "output");
    cfg.out_path = get_or<std::string>(o, "path", cfg.out_path, "output");
    if (o.contains("format")) cfg.out_format = report_format_from_string(o.at("format").get<std::string>());
  }
  if (root.contains("metrics")) {
    const json& m = root.at("metrics");
    reject_unknown_keys(m, {"ssim_window"}, "metrics");
    cfg.ssim_window = get_or<int>(m, "ssim_window", cfg.ssim_window, "metrics");
  }

  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = from_json_text(buf.str());

  if (const char* env = std::getenv("INVLAB_SEED")) {
    std::uint64_t seed = 0;
    const std::string s(env);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), seed);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw ConfigError("INVLAB_SEED: cannot parse '" + s + "' as an unsigned integer");
    }
    cfg.suite.master_seed = seed;
  }
  return cfg;
}

void RunConfig::apply_override(const std::string& key, const std::string& value) {
  auto as_int = [&](const char* name) {
    try {
      return std::stoi(value);
    } catch (...) {
      throw ConfigError(std::string(name) + ": cannot parse '" + value + "' as an integer");
    }
  };
  auto as_double = [&](const char* name) {
    try {
      return std::stod(value);
    } catch (...) {
      throw ConfigError(std::string(name) + ": cannot parse '" + value + "' as a number");
    }
  };

  if (key == "schedule.T") schedule_T = as_int("schedule.T");
  else if (key == "schedule.beta_start") beta_start = as_double("schedule.beta_start");
  else if (key == "schedule.beta_end") beta_end = as_double("schedule.beta_end");
  else if (key == "schedule.kind") schedule_kind = schedule_kind_from_string(value);
  else if (key == "suite.n") suite.n = as_int("suite.n");
  else if (key == "suite.seeds") suite.seeds = as_int("suite.seeds");
  else if (key == "suite.master_seed") {
    std::uint64_t seed = 0;
    const auto res = std::from_chars(value.data(), value.data() + value.size(), seed);
    if (res.ec != std::errc{} || res.ptr != value.data() + value.size()) {
      throw ConfigError("suite.master_seed: cannot parse '" + value + "'");
    }
    suite.master_seed = seed;
  } else if (key == "suite.dims") {
    const auto x = value.find('x');
    if (x == std::string::npos) throw ConfigError("suite.dims: expected ROWSxCOLS, e.g. 16x16");
    suite.rows = std::stoi(value.substr(0, x));
    suite.cols = std::stoi(value.substr(x + 1));
  } else if (key == "suite.K") suite.K = as_int("suite.K");
  else if (key == "suite.separation") suite.separation = as_double("suite.separation");
  else if (key == "suite.blob_radius") suite.blob_radius = as_double("suite.blob_radius");
  else if (key == "edit.rho") rho = as_double("edit.rho");
  else if (key == "edit.tau_fraction") tau_fraction = as_double("edit.tau_fraction");
  else if (key == "edit.single_branch_variables") {
    if (value == "true" || value == "1") single_branch_variables = true;
    else if (value == "false" || value == "0") single_branch_variables = false;
    else throw ConfigError("edit.single_branch_variables: expected true or false");
  } else if (key == "guidance.w_inv") w_inv = parse_double_list(value, "guidance.w_inv");
  else if (key == "guidance.w_fwd") w_fwd = parse_double_list(value, "guidance.w_fwd");
  else if (key == "output.path") out_path = value;
  else if (key == "output.format") out_format = report_format_from_string(value);
  else if (key == "metrics.ssim_window") ssim_window = as_int("metrics.ssim_window");
  else throw ConfigError("override: unknown config path '" + key + "'");

  validate();
}

void RunConfig::validate() const {
  // NoiseSchedule::build revalidates, but fail fast with field names here.
  if (schedule_T < 1) throw ConfigError("schedule.T: must be >= 1");
  if (!(beta_start > 0.0)) throw ConfigError("schedule.beta_start: must be > 0");
  if (!(beta_end < 1.0)) throw ConfigError("schedule.beta_end: must be < 1");
  if (beta_start > beta_end) throw ConfigError("schedule.beta_start: must be <= beta_end");
  suite.validate();
  for (const auto& m : methods) m.correction.validate();
  if (rho < 0.0 || rho > 1.0) throw ConfigError("edit.rho: must be in [0, 1]");
  if (tau_fraction < 0.0 || tau_fraction > 1.0) {
    throw ConfigError("edit.tau_fraction: must be in [0, 1]");
  }
  if (w_inv.empty()) throw ConfigError("guidance.w_inv: must not be empty");
  if (w_fwd.empty()) throw ConfigError("guidance.w_fwd: must not be empty");
  if (ssim_window < 1 || ssim_window % 2 == 0) {
    throw ConfigError("metrics.ssim_window: must be a positive odd integer");
  }
  if (out_path.empty()) throw ConfigError("output.path: must not be empty");
}

NoiseSchedule RunConfig::make_schedule() const {
  return NoiseSchedule::build(schedule_T, beta_start, beta_end, schedule_kind);
}

std::vector<RunSpec> RunConfig::expand_configs() const {
  std::vector<RunSpec> out;
  for (const auto& entry : methods) {
    std::vector<TargetMode> modes;
    if (entry.task == "edit" && !target_mode_sweep.empty()) {
      modes = target_mode_sweep;
    } else {
      modes = {entry.correction.target_mode};
    }
    for (const TargetMode tm : modes) {
      for (const double wi : w_inv) {
        for (const double wf : w_fwd) {
          RunSpec rs;
          rs.task = entry.task;
          rs.correction = entry.correction;
          rs.correction.target_mode = tm;
          rs.rho = rho;
          rs.tau_fraction = tau_fraction;
          rs.single_branch_variables = single_branch_variables;
          rs.w_inv = wi;
          rs.w_fwd = wf;
          out.push_back(rs);
        }
      }
    }
  }
  return out;
}

}  // namespace invlab
