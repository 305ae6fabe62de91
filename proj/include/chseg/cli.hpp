#pragma once

// Batch front end: segment, evaluate, noise and bench subcommands.
// Needs the vendored CLI11 and nlohmann/json single headers on the include path.

#include <fnmatch.h>

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>
#include <json.hpp>

#include "chseg/config.hpp"
#include "chseg/imageio.hpp"
#include "chseg/metrics.hpp"
#include "chseg/pipeline.hpp"
#include "chseg/synthetic.hpp"

#ifndef CHSEG_VERSION
#define CHSEG_VERSION "0.0.0"
#endif

namespace chseg::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;

enum ExitCode : int { kOk = 0, kUnexpected = 1, kConfig = 2, kIo = 3, kNumerical = 4 };

inline bool is_image_file(const fs::path& p) {
  const std::string ext = detail::lower_extension(p);
  return ext == ".png" || ext == ".pgm";
}

inline bool has_wildcard(const std::string& s) { return s.find_first_of("*?[") != std::string::npos; }

/// Files named by a list of paths, directories (their .png/.pgm entries) or
/// filename globs such as data/*.png. Sorted, duplicates dropped.
inline std::vector<fs::path> expand_inputs(const std::vector<std::string>& specs) {
  std::set<fs::path> found;
  auto add_dir = [&](const fs::path& dir, const std::string* pattern) {
    std::size_t before = found.size();
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (!entry.is_regular_file()) continue;
      const fs::path& p = entry.path();
      if (pattern) {
        if (fnmatch(pattern->c_str(), p.filename().c_str(), 0) == 0) found.insert(p);
      } else if (is_image_file(p)) {
        found.insert(p);
      }
    }
    return found.size() > before;
  };
  for (const auto& spec : specs) {
    const fs::path p(spec);
    if (has_wildcard(p.filename().string())) {
      const fs::path dir = p.has_parent_path() ? p.parent_path() : fs::path(".");
      const std::string pattern = p.filename().string();
      if (!fs::is_directory(dir)) throw IoError("input directory does not exist: " + dir.string());
      if (!add_dir(dir, &pattern)) throw IoError("input pattern matched nothing: " + spec);
    } else if (fs::is_directory(p)) {
      if (!add_dir(p, nullptr)) throw IoError("input directory holds no .png/.pgm files: " + spec);
    } else if (fs::is_regular_file(p)) {
      found.insert(p);
    } else {
      throw IoError("input does not exist: " + spec);
    }
  }
  return {found.begin(), found.end()};
}

/// id (file stem) -> path for the images in a directory.
inline std::map<std::string, fs::path> index_by_stem(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::map<std::string, fs::path> out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    const std::string id = p.stem().string();
    if (!out.emplace(id, p).second) throw ConfigError("image id collision in " + dir.string() + ": " + id);
  }
  return out;
}

inline void check_unique_ids(const std::vector<fs::path>& files) {
  std::map<std::string, fs::path> seen;
  for (const auto& p : files) {
    const auto [it, fresh] = seen.emplace(p.stem().string(), p);
    if (!fresh) throw ConfigError("image id collision: " + it->second.string() + " and " + p.string());
  }
}

/// Exit code for a failure inside one image's processing.
inline int image_failure_code(const std::exception& e) {
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  return kIo;
}

inline json stability_json(const StabilityReport& r) {
  json u = json::array(), lap = json::array();
  for (const auto& s : r.norms) {
    u.push_back(s.u_norm);
    lap.push_back(s.lap_norm);
  }
  json j{{"cond1", r.cond1},
         {"cond2", r.cond2},
         {"satisfied", r.satisfied},
         {"k_empirical", r.k_empirical},
         {"flagged_steps", r.flagged_steps},
         {"u_norms", u},
         {"laplacian_norms", lap}};
  if (!r.note.empty()) j["note"] = r.note;
  return j;
}

inline json config_json(const RunConfig& c) {
  // Numbers stay numbers; the 64-bit seed must not pass through a double.
  auto typed = [](const std::string& v) -> json {
    if (!v.empty() && v.find_first_not_of("0123456789") == std::string::npos) return std::stoull(v);
    char* end = nullptr;
    const double d = std::strtod(v.c_str(), &end);
    if (!v.empty() && end == v.c_str() + v.size()) return d;
    if (v == "true" || v == "false") return v == "true";
    return v;
  };
  json j = json::object();
  for (const auto& [k, v] : config_entries(c)) {
    if (k == "input") {
      j["input"].push_back(v);
    } else if (k == "bicgstab_caps") {
      j[k] = c.pipeline.tfpm.bicgstab_max_iters;
    } else if (k == "out" || k == "gt") {
      j[k] = v;
    } else {
      j[k] = typed(v);
    }
  }
  return j;
}

inline json substitutions_json(const RunConfig& c) {
  return {
      {"f_to_t_handoff", "identity: the tailored stage starts from the clamped spectral output"},
      {"output_layer", "learned convolution and sigmoid replaced by thresholding at " + detail::fmt_real(c.pipeline.threshold)},
      {"region_coefficients", "H1 and H2 evaluated analytically from the region means"},
      {"noise", "zero-mean Gaussian in [0,1] intensity units, result clamped to [0,1]"},
      {"hd95", "95th percentile of pooled symmetric distances between 4-connected boundaries, in pixels"},
  };
}

struct ImageOutcome {
  std::string id;
  std::string source;
  std::optional<std::uint64_t> noise_seed;
  int code = kOk;
  std::string error;
  std::optional<MetricsReport> metrics;
  json details;  // deterministic per-image summary
  json timings;
};

class OpsCache {
 public:
  explicit OpsCache(double spacing) : spacing_(spacing) {}

  SpectralOps& get(std::size_t nx, std::size_t ny) {
    auto& slot = cache_[{nx, ny}];
    if (!slot) slot = std::make_unique<SpectralOps>(GridSpec::with_spacing(nx, ny, spacing_));
    return *slot;
  }

 private:
  double spacing_;
  std::map<std::pair<std::size_t, std::size_t>, std::unique_ptr<SpectralOps>> cache_;
};

inline void write_traces(const fs::path& dir, const std::string& id, const SegmentationResult& r) {
  fs::create_directories(dir);
  std::ofstream f(dir / (id + "_fsm.csv"));
  f << "block,step,rel_change,c1,c2\n";
  f.precision(17);
  for (std::size_t b = 0; b < r.f_traces.size(); ++b) {
    const auto& t = r.f_traces[b];
    for (std::size_t k = 0; k < t.residuals.size(); ++k) {
      f << b << ',' << k + 1 << ',' << t.residuals[k] << ',' << t.stats[k].c1 << ',' << t.stats[k].c2 << '\n';
    }
  }
  std::ofstream t(dir / (id + "_tfpm.csv"));
  write_tfpm_csv(t, r.t_records);
  if (!f || !t) throw IoError("cannot write trace files under " + dir.string());
}

inline ImageOutcome segment_one(const fs::path& path, const RunConfig& cfg, OpsCache& ops,
                                const std::map<std::string, fs::path>* gt) {
  ImageOutcome out;
  out.id = path.stem().string();
  out.source = path.string();
  try {
    ImageRecord rec = load_image(path, cfg.size, cfg.pipeline.spacing);
    if (cfg.sigma) {
      out.noise_seed = image_seed(out.id, cfg.seed);
      rec = add_gaussian_noise(rec, {*cfg.sigma, *out.noise_seed});
    }
    const ScalarField& f = rec.pixels;
    SegmentationResult r = segment_field(ops.get(f.nx(), f.ny()), f, cfg.pipeline);

    const fs::path out_dir(cfg.out_dir);
    save_mask(r.mask, out_dir / "masks" / (out.id + ".png"));
    if (cfg.trace) write_traces(out_dir / "traces", out.id, r);

    json fblocks = json::array();
    for (const auto& t : r.f_traces) {
      fblocks.push_back({{"iterations", t.iterations},
                         {"converged", t.converged},
                         {"final_rel_change", t.residuals.empty() ? 0.0 : t.residuals.back()}});
    }
    json tsteps = json::array();
    for (const auto& t : r.t_records) {
      tsteps.push_back({{"block", t.block},
                        {"step", t.step},
                        {"max_iters", t.max_iters},
                        {"iterations", t.solve.iterations},
                        {"relative_residual", t.solve.relative_residual},
                        {"converged", t.solve.converged},
                        {"breakdown", t.solve.breakdown},
                        {"c1", t.stats.c1},
                        {"c2", t.stats.c2}});
    }
    out.details = {{"rows", f.nx()},
                   {"cols", f.ny()},
                   {"original_width", rec.original_width},
                   {"original_height", rec.original_height},
                   {"f_blocks", fblocks},
                   {"t_steps", tsteps},
                   {"fsm_range", {r.fsm_min, r.fsm_max}},
                   {"foreground_pixels", r.mask.count()},
                   {"stability", stability_json(r.stability)}};
    out.timings = {{"f_seconds", r.f_seconds}, {"t_seconds", r.t_seconds}};

    if (gt) {
      const auto it = gt->find(out.id);
      if (it == gt->end()) throw IoError("no ground truth for id " + out.id);
      const BinaryMask truth = load_mask(it->second, r.mask.nx(), r.mask.ny());
      out.metrics = evaluate_masks(r.mask, truth);
    }
  } catch (const std::exception& e) {
    out.code = image_failure_code(e);
    out.error = e.what();
  }
  return out;
}

/// Runs fn(i) for i in [0, n) on `workers` threads. fn must not throw.
template <class Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), n);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i, 0);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < nthreads; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = next++; i < n; i = next++) fn(i, w);
    });
  }
  for (auto& t : pool) t.join();
}

inline void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  os << j.dump(2) << '\n';
  if (!os) throw IoError("cannot write " + path.string());
}

inline int first_failure(const std::vector<ImageOutcome>& outcomes) {
  for (const auto& o : outcomes) {
    if (o.code != kOk) return o.code;
  }
  return kOk;
}

inline int cmd_segment(const RunConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  cfg.validate();
  if (cfg.inputs.empty()) throw ConfigError("segment needs at least one --input");
  const auto files = expand_inputs(cfg.inputs);
  check_unique_ids(files);
  std::optional<std::map<std::string, fs::path>> gt;
  if (!cfg.gt_dir.empty()) gt = index_by_stem(cfg.gt_dir);

  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir / "masks");

  std::vector<ImageOutcome> outcomes(files.size());
  std::vector<OpsCache> caches;
  for (int w = 0; w < cfg.workers; ++w) caches.emplace_back(cfg.pipeline.spacing);
  parallel_for(files.size(), cfg.workers, [&](std::size_t i, std::size_t w) {
    outcomes[i] = segment_one(files[i], cfg, caches[w], gt ? &*gt : nullptr);
  });

  json images = json::array();
  std::vector<MetricsRow> rows;
  for (const auto& o : outcomes) {
    json j{{"id", o.id}, {"source", o.source}, {"status", o.code == kOk ? "ok" : "error"}};
    if (o.noise_seed) j["noise_seed"] = *o.noise_seed;
    if (o.code != kOk) {
      j["error"] = o.error;
      j["exit_code"] = o.code;
      err << o.id << ": error: " << o.error << '\n';
    } else {
      j["result"] = o.details;
      j["timings"] = o.timings;
      log << o.id << ": ok";
      if (o.metrics) {
        j["metrics"] = {{"dice", o.metrics->dice}, {"jaccard", o.metrics->jaccard}, {"hd95", o.metrics->hd95}};
        char buf[128];
        std::snprintf(buf, sizeof buf, " dice=%.4f jaccard=%.4f hd95=%.3f", o.metrics->dice, o.metrics->jaccard,
                      o.metrics->hd95);
        log << buf;
      }
      log << '\n';
    }
    if (o.metrics) rows.push_back({o.id, *o.metrics});
    images.push_back(std::move(j));
  }

  if (gt) {
    std::ofstream csv(out_dir / "metrics.csv");
    write_metrics_csv(csv, rows);
    if (!csv) throw IoError("cannot write " + (out_dir / "metrics.csv").string());
  }
  {
    std::ofstream rc(out_dir / "resolved_config.cfg");
    write_config(rc, cfg);
    if (!rc) throw IoError("cannot write resolved_config.cfg");
  }
  json manifest{{"version", CHSEG_VERSION},
                {"command", "segment"},
                {"config", config_json(cfg)},
                {"seed", cfg.seed},
                {"substitutions", substitutions_json(cfg)},
                {"images", images}};
  write_json(out_dir / "manifest.json", manifest);
  return first_failure(outcomes);
}

/// Compares every mask in pred_dir with the same-id mask in gt_dir, the
/// latter resampled to the prediction's size. Unmatched ids on either side
/// are listed and make the exit code nonzero; matched ones are still scored.
inline int cmd_evaluate(const fs::path& pred_dir, const fs::path& gt_dir, const fs::path& out_dir,
                        std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  const auto pred = index_by_stem(pred_dir);
  const auto gt = index_by_stem(gt_dir);
  std::vector<std::string> unmatched;
  for (const auto& [id, p] : pred) {
    if (!gt.contains(id)) unmatched.push_back(id + " (no ground truth)");
  }
  for (const auto& [id, p] : gt) {
    if (!pred.contains(id)) unmatched.push_back(id + " (no prediction)");
  }
  std::vector<MetricsRow> rows;
  int code = kOk;
  for (const auto& [id, p] : pred) {
    const auto it = gt.find(id);
    if (it == gt.end()) continue;
    try {
      const BinaryMask pm = load_mask(p);
      const BinaryMask gm = load_mask(it->second, pm.nx(), pm.ny());
      rows.push_back({id, evaluate_masks(pm, gm)});
    } catch (const std::exception& e) {
      err << id << ": error: " << e.what() << '\n';
      if (code == kOk) code = image_failure_code(e);
    }
  }
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "metrics.csv");
  write_metrics_csv(csv, rows);
  if (!csv) throw IoError("cannot write " + (out_dir / "metrics.csv").string());
  write_metrics_csv(log, rows);
  if (!unmatched.empty()) {
    err << "unmatched ids:\n";
    for (const auto& u : unmatched) err << "  " << u << '\n';
    if (code == kOk) code = kIo;
  }
  return code;
}

/// Writes a noisy copy of every input at its own size, seeded per image by
/// fnv1a(id) ^ seed, plus noise_manifest.json recording those seeds.
inline int cmd_noise(const RunConfig& cfg, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  cfg.validate();
  if (cfg.inputs.empty()) throw ConfigError("noise needs at least one --input");
  const auto files = expand_inputs(cfg.inputs);
  check_unique_ids(files);
  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);
  const double sigma = cfg.sigma.value_or(0.0);
  json images = json::object();
  int code = kOk;
  for (const auto& path : files) {
    const std::string id = path.stem().string();
    const std::uint64_t seed = image_seed(id, cfg.seed);
    try {
      const ImageRecord noisy = add_gaussian_noise(load_image(path, 0), {sigma, seed});
      save_field_png(noisy.pixels, out_dir / (id + ".png"));
      images[id] = {{"seed", seed}, {"source", path.string()}};
      log << id << ": seed " << seed << '\n';
    } catch (const std::exception& e) {
      err << id << ": error: " << e.what() << '\n';
      images[id] = {{"seed", seed}, {"source", path.string()}, {"error", e.what()}};
      if (code == kOk) code = image_failure_code(e);
    }
  }
  write_json(out_dir / "noise_manifest.json", {{"version", CHSEG_VERSION},
                                               {"sigma", sigma},
                                               {"seed", cfg.seed},
                                               {"seed_rule", "fnv1a64(id) xor seed"},
                                               {"images", images}});
  return code;
}

struct BenchRow {
  std::string id;
  std::size_t size = 0;
  double f_seconds = 0.0;
  double t_seconds = 0.0;
  double metrics_seconds = 0.0;
};

inline std::vector<BenchRow> run_bench(const RunConfig& cfg) {
  const std::size_t n = cfg.size == 0 ? 128 : cfg.size;
  const GridSpec grid = GridSpec::with_spacing(n, n, cfg.pipeline.spacing);
  SpectralOps ops(grid);
  std::vector<BenchRow> rows;
  for (int k = 0; k < cfg.count; ++k) {
    char name[32];
    const bool disk = k % 2 == 0;
    std::snprintf(name, sizeof name, "%s_%03d", disk ? "disk" : "stripes", k);
    const ScalarField clean = disk ? make_centered_disk(grid) : make_stripes(grid, std::max<std::size_t>(n / 8, 1));
    ImageRecord rec{name, clean, "", n, n};
    if (cfg.sigma) rec = add_gaussian_noise(rec, {*cfg.sigma, image_seed(name, cfg.seed)});
    const SegmentationResult r = segment_field(ops, rec.pixels, cfg.pipeline);
    const auto t0 = std::chrono::steady_clock::now();
    const MetricsReport m = evaluate_masks(r.mask, to_mask(clean));
    const auto t1 = std::chrono::steady_clock::now();
    (void)m;
    rows.push_back({name, n, r.f_seconds, r.t_seconds, std::chrono::duration<double>(t1 - t0).count()});
  }
  return rows;
}

inline void write_bench_csv(std::ostream& os, const std::vector<BenchRow>& rows) {
  os << "id,size,f_seconds,t_seconds,metrics_seconds\n";
  char buf[160];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%s,%zu,%.6f,%.6f,%.6f\n", r.id.c_str(), r.size, r.f_seconds, r.t_seconds,
                  r.metrics_seconds);
    os << buf;
  }
}

inline int cmd_bench(const RunConfig& cfg, std::ostream& log = std::cout) {
  cfg.validate();
  const auto rows = run_bench(cfg);
  const fs::path out_dir(cfg.out_dir);
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "bench.csv");
  write_bench_csv(csv, rows);
  if (!csv) throw IoError("cannot write " + (out_dir / "bench.csv").string());
  write_bench_csv(log, rows);
  return kOk;
}

/// Maps an exception escaping a command to its exit code and reports it.
inline int report_failure(const std::exception& e, std::ostream& err) {
  err << "error: " << e.what() << '\n';
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const InvalidArgument*>(&e)) return kConfig;
  if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const ShapeMismatch*>(&e) ||
      dynamic_cast<const fs::filesystem_error*>(&e)) {
    return kIo;
  }
  if (dynamic_cast<const NumericalError*>(&e)) return kNumerical;
  return kUnexpected;
}

inline int run(int argc, const char* const* argv, std::ostream& log = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Cahn-Hilliard segmentation toolkit"};
  app.set_version_flag("--version", std::string(CHSEG_VERSION));
  app.require_subcommand(1);

  struct Flags {
    std::string config;
    std::vector<std::string> inputs;
    std::string gt, out;
    double sigma = 0.0, threshold = 0.5;
    std::uint64_t seed = 0;
    std::size_t size = 256;
    int workers = 1, count = 10;
    bool trace = false;
    std::vector<std::string> sets;
  } fl;
  std::map<const CLI::App*, std::map<std::string, CLI::Option*>> opt;

  auto common = [&](CLI::App* s) {
    opt[s]["config"] = s->add_option("--config", fl.config, "key = value configuration file");
    opt[s]["input"] = s->add_option("--input", fl.inputs, "input file, directory or glob (repeatable)");
    opt[s]["out"] = s->add_option("--out", fl.out, "output directory");
    opt[s]["set"] = s->add_option("--set", fl.sets, "extra key=value override (repeatable)");
  };
  auto pipeline = [&](CLI::App* s) {
    opt[s]["gt"] = s->add_option("--gt", fl.gt, "ground-truth mask directory");
    opt[s]["sigma"] = s->add_option("--sigma", fl.sigma, "Gaussian noise level in [0,1] units");
    opt[s]["seed"] = s->add_option("--seed", fl.seed, "base noise seed");
    opt[s]["size"] = s->add_option("--size", fl.size, "resample to size x size (0 keeps the original)");
    opt[s]["threshold"] = s->add_option("--threshold", fl.threshold, "binarization level");
    opt[s]["workers"] = s->add_option("--workers", fl.workers, "worker threads");
    opt[s]["trace"] = s->add_flag("--trace", fl.trace, "write per-step trace CSVs");
  };

  CLI::App* seg = app.add_subcommand("segment", "segment images and write masks, metrics and a manifest");
  common(seg);
  pipeline(seg);
  CLI::App* eval = app.add_subcommand("evaluate", "score predicted masks (--input dir) against --gt");
  std::string e_pred, e_gt, e_out = ".";
  eval->add_option("--input", e_pred, "predicted mask directory")->required();
  eval->add_option("--gt", e_gt, "ground-truth mask directory")->required();
  eval->add_option("--out", e_out, "directory for metrics.csv");
  CLI::App* noise = app.add_subcommand("noise", "write noisy copies of images");
  std::string n_config;
  std::vector<std::string> n_inputs;
  std::string n_out;
  double n_sigma = 0.0;
  std::uint64_t n_seed = 0;
  auto* n_cfg_opt = noise->add_option("--config", n_config, "key = value configuration file");
  auto* n_in_opt = noise->add_option("--input", n_inputs, "input file, directory or glob (repeatable)");
  auto* n_out_opt = noise->add_option("--out", n_out, "output directory");
  auto* n_sigma_opt = noise->add_option("--sigma", n_sigma, "Gaussian noise level in [0,1] units");
  auto* n_seed_opt = noise->add_option("--seed", n_seed, "base noise seed");
  CLI::App* bench = app.add_subcommand("bench", "time the pipeline stages on synthetic images");
  common(bench);
  pipeline(bench);
  opt[bench]["count"] = bench->add_option("--count", fl.count, "number of synthetic images");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, log, err);
    return rc == 0 ? kOk : kConfig;
  }

  auto given = [&](const char* name) {
    const auto& table = opt[*seg ? seg : bench];
    const auto it = table.find(name);
    return it != table.end() && it->second->count() > 0;
  };

  try {
    if (*eval) return cmd_evaluate(e_pred, e_gt, e_out, log, err);

    RunConfig cfg;
    if (*noise) {
      if (n_cfg_opt->count()) cfg = load_config(n_config);
      if (n_in_opt->count()) cfg.inputs = n_inputs;
      if (n_out_opt->count()) cfg.out_dir = n_out;
      if (n_sigma_opt->count()) cfg.sigma = n_sigma;
      if (n_seed_opt->count()) cfg.seed = n_seed;
      return cmd_noise(cfg, log, err);
    }

    if (given("config")) cfg = load_config(fl.config);
    if (given("input")) cfg.inputs = fl.inputs;
    if (given("out")) cfg.out_dir = fl.out;
    if (given("gt")) cfg.gt_dir = fl.gt;
    if (given("sigma")) cfg.sigma = fl.sigma;
    if (given("seed")) cfg.seed = fl.seed;
    if (given("size")) cfg.size = fl.size;
    if (given("threshold")) cfg.pipeline.threshold = fl.threshold;
    if (given("workers")) cfg.workers = fl.workers;
    if (given("trace")) cfg.trace = fl.trace;
    if (given("count")) cfg.count = fl.count;
    for (const auto& kv : fl.sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
      apply_setting(cfg, detail::trim(kv.substr(0, eq)), detail::trim(kv.substr(eq + 1)));
    }
    if (*seg) return cmd_segment(cfg, log, err);
    return cmd_bench(cfg, log);
  } catch (const std::exception& e) {
    return report_failure(e, err);
  }
}

}  // namespace chseg::cli
