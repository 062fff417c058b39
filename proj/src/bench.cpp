// SPDX-License-Identifier: Apache-2.0
#include "invlab/bench.hpp"

#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include <json.hpp>

#include "invlab/rng.hpp"

namespace invlab {

void SuiteParams::validate() const {
  if (n < 1) throw ConfigError("suite.n: must be >= 1");
  if (seeds < 1) throw ConfigError("suite.seeds: must be >= 1");
  if (rows < 4 || cols < 4) throw ConfigError("suite.dims: grid must be at least 4x4");
  if (K < 2) throw ConfigError("suite.K: need at least source and target components");
  if (!(separation >= 0.0)) throw ConfigError("suite.separation: must be >= 0");
  if (!(blob_radius > 0.0)) throw ConfigError("suite.blob_radius: must be > 0");
  // The widest variant (background_shift) uses 1.3x the radius and masks out
  // to ~1.073x beyond that; it has to fit inside the grid.
  const double reach = 2.0 * 1.3 * 1.073 * blob_radius;
  if (reach > std::min(rows, cols)) {
    throw ConfigError("suite.blob_radius: blob larger than grid");
  }
}

namespace {

constexpr double kSigma2 = 0.09;         // per-component variance of the suite mixtures
constexpr double kConditionStrength = 10.0;
constexpr double kMaskThreshold = 0.1;   // mask cells where |diff| exceeds this times max |diff|

Latent gaussian_bump(int rows, int cols, double cr, double cc, double radius) {
  Latent g(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double dr = r - cr;
      const double dc = c - cc;
      g(r, c) = std::exp(-2.0 * (dr * dr + dc * dc) / (radius * radius));
    }
  }
  return g;
}

Latent smooth_field(SplitMix64& rng, int rows, int cols) {
  Latent f = Latent::Zero(rows, cols);
  for (int i = 0; i < 3; ++i) {
    const double cr = rng.next_double() * (rows - 1);
    const double cc = rng.next_double() * (cols - 1);
    const double radius = 3.0 + 3.0 * rng.next_double();
    const double amp = rng.next_symmetric();
    f += amp * gaussian_bump(rows, cols, cr, cc, radius);
  }
  return f;
}

double pick_center(SplitMix64& rng, int dim, double margin) {
  const double lo = margin;
  const double hi = static_cast<double>(dim - 1) - margin;
  return lo + rng.next_double() * (hi - lo);
}

}  // namespace

std::vector<Scenario> generate_suite(int n, std::uint64_t master_seed, int rows, int cols, int K,
                                     double separation, double blob_radius, int replicate) {
  SuiteParams check;
  check.n = n;
  check.rows = rows;
  check.cols = cols;
  check.K = K;
  check.separation = separation;
  check.blob_radius = blob_radius;
  check.validate();
  if (separation == 0.0) {
    throw ConfigError("suite.separation: zero separation produces an empty edit mask");
  }

  static const char* kEditTypes[] = {"translate_blob", "recolor_blob", "background_shift"};

  std::vector<Scenario> suite;
  suite.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::uint64_t seed = SplitMix64::derive(master_seed, static_cast<std::uint64_t>(i));
    SplitMix64 rng(seed);
    const std::string edit_type = kEditTypes[i % 3];
    const double margin = blob_radius;

    // Raw shapes first; the difference is then normalized so the mode
    // distance |mu_tgt - mu_src| is exactly separation * sigma.
    Latent base_field = smooth_field(rng, rows, cols);
    Latent src_extra = Latent::Zero(rows, cols);
    Latent diff;
    if (edit_type == "translate_blob") {
      const double r1 = pick_center(rng, rows, margin);
      const double c1 = pick_center(rng, cols, margin);
      double r2 = pick_center(rng, rows, margin);
      double c2 = pick_center(rng, cols, margin);
      // keep the two lobes apart so the move is visible
      while ((r2 - r1) * (r2 - r1) + (c2 - c1) * (c2 - c1) < blob_radius * blob_radius) {
        r2 = pick_center(rng, rows, margin);
        c2 = pick_center(rng, cols, margin);
      }
      const Latent lobe1 = gaussian_bump(rows, cols, r1, c1, blob_radius);
      const Latent lobe2 = gaussian_bump(rows, cols, r2, c2, blob_radius);
      src_extra = lobe1;
      diff = lobe2 - lobe1;
    } else if (edit_type == "recolor_blob") {
      const double r1 = pick_center(rng, rows, margin);
      const double c1 = pick_center(rng, cols, margin);
      const Latent lobe = gaussian_bump(rows, cols, r1, c1, blob_radius);
      src_extra = lobe;
      diff = -2.0 * lobe;
    } else {
      const double wide = 1.3 * blob_radius;
      const double r1 = pick_center(rng, rows, wide);
      const double c1 = pick_center(rng, cols, wide);
      diff = gaussian_bump(rows, cols, r1, c1, wide);
    }
    const double factor = separation * std::sqrt(kSigma2) / std::sqrt(diff.square().sum());
    const Latent mu_src = base_field + factor * src_extra;
    diff = factor * diff;
    const Latent mu_tgt = mu_src + diff;

    const double peak = diff.abs().maxCoeff();
    Mask mask = diff.abs() > kMaskThreshold * peak;
    const long masked = mask.count();
    const long total = static_cast<long>(rows) * cols;
    if (masked == 0) throw ConfigError("suite: degenerate edit, empty mask");
    if (masked > total / 2) {
      throw ConfigError("suite: edit region covers more than half the grid");
    }

    std::vector<Latent> means;
    means.push_back(mu_src);
    means.push_back(mu_tgt);
    for (int k = 2; k < K; ++k) means.push_back(smooth_field(rng, rows, cols));

    MixtureModel model(std::move(means), Eigen::VectorXd::Constant(K, kSigma2),
                       Eigen::VectorXd::Constant(K, 1.0 / K));
    Condition c_src = Condition::one_hot(K, 0, kConditionStrength, "src");
    Condition c_tgt = Condition::one_hot(K, 1, kConditionStrength, "tgt");

    // Draw z0 from the source-conditioned mixture.
    const Eigen::VectorXd w = model.effective_weights(c_src);
    const double u = rng.next_double();
    int comp = 0;
    double cum = 0.0;
    for (int k = 0; k < K; ++k) {
      cum += w[k];
      if (u <= cum) {
        comp = k;
        break;
      }
    }
    const Latent z0 = model.mean(comp) + std::sqrt(model.sigma2(comp)) * rng.normal_grid(rows, cols);

    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "s%03d_r%d", i, replicate);
    suite.push_back(Scenario{idbuf, seed, std::move(model), std::move(c_src), std::move(c_tgt),
                             z0, std::move(mask), edit_type});
  }
  return suite;
}

std::vector<Scenario> generate_full_suite(const SuiteParams& p) {
  p.validate();
  std::vector<Scenario> all;
  all.reserve(static_cast<std::size_t>(p.n) * static_cast<std::size_t>(p.seeds));
  for (int r = 0; r < p.seeds; ++r) {
    const std::uint64_t batch_seed =
        p.seeds == 1 ? p.master_seed
                     : SplitMix64::derive(p.master_seed, 0x5EED0000ull + static_cast<std::uint64_t>(r));
    auto batch = generate_suite(p.n, batch_seed, p.rows, p.cols, p.K, p.separation, p.blob_radius, r);
    for (auto& sc : batch) all.push_back(std::move(sc));
  }
  return all;
}

const std::vector<std::string>& report_columns() {
  static const std::vector<std::string> cols = {
      "scenario_id", "seed",     "method",      "w_inv",
      "w_fwd",       "opt_iters", "scale",      "interval",
      "target_mode", "rho",      "tau",         "mse_all",
      "mse_bg",      "psnr_bg",  "ssim_bg",     "structure_distance",
      "fidelity_whole", "fidelity_region", "wall_ms", "task",
      "version",     "error"};
  return cols;
}

ReportRow run_one(const Scenario& sc, const RunSpec& rs, const NoiseSchedule& s, int ssim_window) {
  ReportRow row;
  row.scenario_id = sc.id;
  row.seed = sc.seed;
  row.method = to_string(rs.correction.method);
  row.w_inv = rs.w_inv;
  row.w_fwd = rs.w_fwd;
  row.opt_iters = rs.correction.opt_iters;
  row.scale = rs.correction.scale;
  row.interval = rs.correction.interval;
  row.target_mode = to_string(rs.correction.target_mode);
  row.task = rs.task;
  if (rs.task == "edit") {
    row.rho = rs.rho;
    row.tau = static_cast<double>(
        EditConfig{rs.rho, rs.tau_fraction, rs.correction, rs.single_branch_variables}.tau_steps(
            s.step_count()));
  }

  const auto t0 = std::chrono::steady_clock::now();
  const Condition null_cond = Condition::null_of(sc.model.component_count());

  Latent out;
  const Condition* fidelity_cond = nullptr;
  if (rs.task == "reconstruct") {
    const Trajectory traj = invert(sc.z0, sc.c_src, null_cond, rs.w_inv, sc.model, s);
    out = reconstruct(traj, sc.c_src, null_cond, rs.w_fwd, rs.correction, sc.model, s).z0_hat;
    fidelity_cond = &sc.c_src;
  } else if (rs.task == "edit") {
    EditConfig ec{rs.rho, rs.tau_fraction, rs.correction, rs.single_branch_variables};
    out = edit(sc.z0, sc.c_src, sc.c_tgt, ec, rs.w_inv, rs.w_fwd, sc.model, s).z0_tgt;
    fidelity_cond = &sc.c_tgt;
  } else {
    throw ConfigError("bench: unknown task '" + rs.task + "'");
  }

  const double peak = sc.z0.maxCoeff() - sc.z0.minCoeff();
  const double c1 = (0.01 * peak) * (0.01 * peak);
  const double c2 = (0.03 * peak) * (0.03 * peak);

  row.metrics.mse_all = mse(sc.z0, out);
  row.metrics.mse_bg = mse(sc.z0, out, &sc.mask, /*invert_mask=*/true);
  row.metrics.psnr_bg = psnr(sc.z0, out, &sc.mask, /*invert_mask=*/true, peak);
  row.metrics.ssim_bg = ssim(sc.z0, out, &sc.mask, /*invert_mask=*/true, ssim_window, c1, c2);
  row.metrics.structure_distance = structure_distance(sc.z0, out, 4);
  row.metrics.fidelity_whole = edit_fidelity(out, sc.model, *fidelity_cond);
  row.metrics.fidelity_region = edit_fidelity(out, sc.model, *fidelity_cond, &sc.mask);

  const auto t1 = std::chrono::steady_clock::now();
  row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  return row;
}

std::vector<ReportRow> run_bench(const std::vector<Scenario>& suite,
                                 const std::vector<RunSpec>& configs, int workers,
                                 const NoiseSchedule& s, int ssim_window) {
  if (configs.empty()) throw ConfigError("bench: configs must not be empty");
  if (workers < 1) workers = 1;

  const std::size_t total = suite.size() * configs.size();
  std::vector<ReportRow> rows(total);
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= total) return;
      const Scenario& sc = suite[i / configs.size()];
      const RunSpec& rs = configs[i % configs.size()];
      try {
        rows[i] = run_one(sc, rs, s, ssim_window);
      } catch (const std::exception& e) {
        ReportRow& row = rows[i];
        row.scenario_id = sc.id;
        row.seed = sc.seed;
        row.method = to_string(rs.correction.method);
        row.w_inv = rs.w_inv;
        row.w_fwd = rs.w_fwd;
        row.opt_iters = rs.correction.opt_iters;
        row.scale = rs.correction.scale;
        row.interval = rs.correction.interval;
        row.target_mode = to_string(rs.correction.target_mode);
        row.task = rs.task;
        row.error = e.what();
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int i = 0; i < workers; ++i) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  return rows;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

ReportFormat report_format_from_string(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "json") return ReportFormat::json;
  throw ConfigError("output.format: unknown value '" + s + "' (expected csv or json)");
}

namespace {

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::vector<std::string> row_to_fields(const ReportRow& r) {
  return {r.scenario_id,
          std::to_string(r.seed),
          r.method,
          format_double(r.w_inv),
          format_double(r.w_fwd),
          std::to_string(r.opt_iters),
          format_double(r.scale),
          std::to_string(r.interval),
          r.target_mode,
          format_double(r.rho),
          format_double(r.tau),
          format_double(r.metrics.mse_all),
          format_double(r.metrics.mse_bg),
          format_double(r.metrics.psnr_bg),
          format_double(r.metrics.ssim_bg),
          format_double(r.metrics.structure_distance),
          format_double(r.metrics.fidelity_whole),
          format_double(r.metrics.fidelity_region),
          format_double(r.wall_ms),
          r.task,
          r.version,
          r.error};
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

double parse_double_field(const std::string& s, const std::string& col) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
    throw IoError("report: cannot parse '" + s + "' in column " + col);
  }
  return v;
}

}  // namespace

void write_report(const std::vector<ReportRow>& rows, const std::string& path, ReportFormat fmt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);

  if (fmt == ReportFormat::csv) {
    const auto& cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
      if (i > 0) out << ',';
      out << cols[i];
    }
    out << '\n';
    for (const auto& r : rows) {
      const auto fields = row_to_fields(r);
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out << ',';
        out << csv_escape(fields[i]);
      }
      out << '\n';
    }
  } else {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
      arr.push_back({{"scenario_id", r.scenario_id},
                     {"seed", r.seed},
                     {"method", r.method},
                     {"w_inv", r.w_inv},
                     {"w_fwd", r.w_fwd},
                     {"opt_iters", r.opt_iters},
                     {"scale", r.scale},
                     {"interval", r.interval},
                     {"target_mode", r.target_mode},
                     {"rho", r.rho},
                     {"tau", r.tau},
                     {"mse_all", r.metrics.mse_all},
                     {"mse_bg", r.metrics.mse_bg},
                     {"psnr_bg", r.metrics.psnr_bg},
                     {"ssim_bg", r.metrics.ssim_bg},
                     {"structure_distance", r.metrics.structure_distance},
                     {"fidelity_whole", r.metrics.fidelity_whole},
                     {"fidelity_region", r.metrics.fidelity_region},
                     {"wall_ms", r.wall_ms},
                     {"task", r.task},
                     {"version", r.version},
                     {"error", r.error}});
    }
    out << arr.dump(2) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

std::vector<ReportRow> read_report_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path);

  std::string line;
  if (!std::getline(in, line)) throw IoError("report: empty file " + path);
  const auto header = split_csv_line(line);
  const auto& cols = report_columns();
  if (header != cols) throw IoError("report: unexpected CSV header in " + path);

  std::vector<ReportRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != cols.size()) throw IoError("report: malformed row in " + path);
    ReportRow r;
    r.scenario_id = f[0];
    r.seed = static_cast<std::uint64_t>(std::stoull(f[1]));
    r.method = f[2];
    r.w_inv = parse_double_field(f[3], "w_inv");
    r.w_fwd = parse_double_field(f[4], "w_fwd");
    r.opt_iters = std::stoi(f[5]);
    r.scale = parse_double_field(f[6], "scale");
    r.interval = std::stoi(f[7]);
    r.target_mode = f[8];
    r.rho = parse_double_field(f[9], "rho");
    r.tau = parse_double_field(f[10], "tau");
    r.metrics.mse_all = parse_double_field(f[11], "mse_all");
    r.metrics.mse_bg = parse_double_field(f[12], "mse_bg");
    r.metrics.psnr_bg = parse_double_field(f[13], "psnr_bg");
    r.metrics.ssim_bg = parse_double_field(f[14], "ssim_bg");
    r.metrics.structure_distance = parse_double_field(f[15], "structure_distance");
    r.metrics.fidelity_whole = parse_double_field(f[16], "fidelity_whole");
    r.metrics.fidelity_region = parse_double_field(f[17], "fidelity_region");
    r.wall_ms = parse_double_field(f[18], "wall_ms");
    r.task = f[19];
    r.version = f[20];
    r.error = f[21];
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace invlab
