#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "chseg/cli.hpp"
#include "oracles.hpp"

using namespace chseg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CliResult {
  int code;
  std::string out, err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "chseg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// Writes a clean disk image and its mask as <dir>/<id>.png.
void write_disk(const fs::path& img_dir, const fs::path& gt_dir, const std::string& id, std::size_t n, double shift) {
  const GridSpec g = GridSpec::with_spacing(n, n, 1.0);
  const double c = 0.5 * double(n - 1);
  const ScalarField d = make_disk(g, 0.25 * double(n - 1), c + shift, c - shift);
  fs::create_directories(img_dir);
  save_field_png(d, img_dir / (id + ".png"));
  if (!gt_dir.empty()) {
    fs::create_directories(gt_dir);
    save_mask(to_mask(d), gt_dir / (id + ".png"));
  }
}

json without_timings(json m) {
  for (auto& img : m["images"]) img.erase("timings");
  m["config"].erase("out");
  return m;
}

}  // namespace

TEST(Config, ParseAndRoundTrip) {
  std::istringstream in(
      "# comment line\n"
      "epsilon = 0.8   # trailing comment\n"
      "bicgstab_caps = 3, 6, 9, 12, 15\n"
      "sigma = 0.25\n"
      "seed = 18446744073709551615\n"
      "input = a.png\n"
      "input = b.png\n"
      "\n"
      "trace = true\n");
  RunConfig cfg;
  parse_config(in, cfg);
  EXPECT_EQ(cfg.pipeline.model.epsilon, 0.8);
  EXPECT_EQ(cfg.pipeline.tfpm.bicgstab_max_iters, (std::vector<int>{3, 6, 9, 12, 15}));
  EXPECT_EQ(*cfg.sigma, 0.25);
  EXPECT_EQ(cfg.seed, 18446744073709551615ull);
  EXPECT_EQ(cfg.inputs.size(), 2u);
  EXPECT_TRUE(cfg.trace);

  std::ostringstream os;
  write_config(os, cfg);
  RunConfig back;
  std::istringstream in2(os.str());
  parse_config(in2, back);
  EXPECT_EQ(config_entries(back), config_entries(cfg));
}

TEST(Config, Errors) {
  RunConfig cfg;
  std::istringstream unknown("epsilon = 1\nfoo = 2\n");
  try {
    parse_config(unknown, cfg, "x.cfg");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("x.cfg:2"), std::string::npos);
  }
  std::istringstream bad_num("dt = fast\n");
  EXPECT_THROW(parse_config(bad_num, cfg), ConfigError);
  std::istringstream no_eq("dt 0.1\n");
  EXPECT_THROW(parse_config(no_eq, cfg), ConfigError);

  const fs::path dir = oracle::scratch_dir("cli_cfg");
  std::ofstream(dir / "bad.cfg") << "lambda = 1\nnot_a_key = 3\n";
  EXPECT_EQ(run_cli({"segment", "--config", (dir / "bad.cfg").string(), "--input", dir.string()}).code, 2);
  EXPECT_EQ(run_cli({"segment", "--bogus"}).code, 2);
  EXPECT_EQ(run_cli({"segment", "--set", "dt=-1", "--input", dir.string()}).code, 2);
  EXPECT_EQ(run_cli({"segment", "--input", (dir / "nope.png").string(), "--out", (dir / "o").string()}).code, 3);
  fs::remove_all(dir);
}

TEST(Segment, WritesMasksManifestAndMetrics) {
  const fs::path dir = oracle::scratch_dir("cli_seg");
  write_disk(dir / "img", dir / "gt", "disk", 48, 0.0);
  const auto r = run_cli({"segment", "--input", (dir / "img").string(), "--gt", (dir / "gt").string(), "--out",
                          (dir / "out").string(), "--size", "64", "--sigma", "0.3", "--seed", "7", "--trace"});
  ASSERT_EQ(r.code, 0) << r.err;
  ASSERT_TRUE(fs::exists(dir / "out/masks/disk.png"));
  EXPECT_EQ(load_mask(dir / "out/masks/disk.png").nx(), 64u);
  EXPECT_TRUE(fs::exists(dir / "out/traces/disk_fsm.csv"));
  EXPECT_TRUE(fs::exists(dir / "out/traces/disk_tfpm.csv"));
  EXPECT_TRUE(fs::exists(dir / "out/resolved_config.cfg"));

  const json m = read_json(dir / "out/manifest.json");
  EXPECT_EQ(m["command"], "segment");
  EXPECT_EQ(m["seed"], 7u);
  ASSERT_EQ(m["images"].size(), 1u);
  const json& img = m["images"][0];
  EXPECT_EQ(img["status"], "ok");
  EXPECT_EQ(img["noise_seed"].get<std::uint64_t>(), image_seed("disk", 7));
  EXPECT_EQ(img["result"]["f_blocks"].size(), 5u);
  ASSERT_EQ(img["result"]["t_steps"].size(), 5u);
  for (int b = 0; b < 5; ++b) EXPECT_EQ(img["result"]["t_steps"][b]["max_iters"], 5 * (b + 1));
  EXPECT_EQ(m["config"]["bicgstab_caps"], json({5, 10, 15, 20, 25}));
  EXPECT_GT(img["metrics"]["dice"].get<double>(), 0.9);

  const std::string csv = slurp(dir / "out/metrics.csv");
  EXPECT_EQ(csv.rfind("id,dice,jaccard,hd95\ndisk,", 0), 0u);
  EXPECT_NE(csv.find("mean±std,"), std::string::npos);

  // The resolved config reproduces the run.
  const auto again = run_cli({"segment", "--config", (dir / "out/resolved_config.cfg").string(), "--out",
                              (dir / "again").string()});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(slurp(dir / "again/masks/disk.png"), slurp(dir / "out/masks/disk.png"));
  EXPECT_EQ(slurp(dir / "again/metrics.csv"), csv);
  fs::remove_all(dir);
}

TEST(Segment, ZeroSigmaMatchesNoNoise) {
  const fs::path dir = oracle::scratch_dir("cli_sigma0");
  write_disk(dir / "img", "", "d", 40, 2.0);
  ASSERT_EQ(run_cli({"segment", "--input", (dir / "img").string(), "--out", (dir / "a").string(), "--size", "0"}).code, 0);
  ASSERT_EQ(run_cli({"segment", "--input", (dir / "img").string(), "--out", (dir / "b").string(), "--size", "0",
                     "--sigma", "0"})
                .code,
            0);
  EXPECT_EQ(slurp(dir / "a/masks/d.png"), slurp(dir / "b/masks/d.png"));
  fs::remove_all(dir);
}

TEST(Segment, DeterministicAcrossRunsAndWorkers) {
  const fs::path dir = oracle::scratch_dir("cli_det");
  for (int k = 0; k < 4; ++k) write_disk(dir / "img", "", "im" + std::to_string(k), 40, double(k) - 1.5);
  auto seg = [&](const std::string& out, const std::string& workers) {
    return run_cli({"segment", "--input", (dir / "img").string(), "--out", (dir / out).string(), "--size", "48",
                    "--sigma", "0.4", "--seed", "11", "--workers", workers})
        .code;
  };
  ASSERT_EQ(seg("r1", "1"), 0);
  ASSERT_EQ(seg("r2", "1"), 0);
  ASSERT_EQ(seg("r3", "3"), 0);
  for (int k = 0; k < 4; ++k) {
    const std::string name = "masks/im" + std::to_string(k) + ".png";
    EXPECT_EQ(slurp(dir / "r1" / name), slurp(dir / "r2" / name));
    EXPECT_EQ(slurp(dir / "r1" / name), slurp(dir / "r3" / name));
  }
  const json m1 = without_timings(read_json(dir / "r1/manifest.json"));
  EXPECT_EQ(m1, without_timings(read_json(dir / "r2/manifest.json")));
  json m3 = without_timings(read_json(dir / "r3/manifest.json"));
  m3["config"]["workers"] = 1;
  EXPECT_EQ(m1, m3);
  fs::remove_all(dir);
}

TEST(Segment, CorruptFileIsIsolated) {
  const fs::path dir = oracle::scratch_dir("cli_corrupt");
  write_disk(dir / "img", "", "good", 32, 0.0);
  std::ofstream(dir / "img/bad.png") << "definitely not a png";
  const auto r = run_cli({"segment", "--input", (dir / "img").string(), "--out", (dir / "out").string(), "--size", "32"});
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.err.find("bad"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "out/masks/good.png"));
  EXPECT_FALSE(fs::exists(dir / "out/masks/bad.png"));
  const json m = read_json(dir / "out/manifest.json");
  ASSERT_EQ(m["images"].size(), 2u);
  EXPECT_EQ(m["images"][0]["id"], "bad");
  EXPECT_EQ(m["images"][0]["status"], "error");
  EXPECT_EQ(m["images"][0]["exit_code"], 3);
  EXPECT_EQ(m["images"][1]["status"], "ok");
  fs::remove_all(dir);
}

TEST(Evaluate, IdenticalMasks) {
  const fs::path dir = oracle::scratch_dir("cli_eval_id");
  write_disk(dir / "img", dir / "gt", "x", 32, 0.0);
  const auto r = run_cli({"evaluate", "--input", (dir / "gt").string(), "--gt", (dir / "gt").string(), "--out",
                          (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "out/metrics.csv").substr(0, 50).find("x,1.000000,1.000000,0.000000"), 21u);
  fs::remove_all(dir);
}

TEST(Evaluate, HandCountedToy) {
  const fs::path dir = oracle::scratch_dir("cli_eval_toy");
  fs::create_directories(dir / "pred");
  fs::create_directories(dir / "gt");
  BinaryMask pa(8, 8), ga(8, 8), pb(8, 8), gb(8, 8), pc(8, 8), gc(8, 8);
  for (std::size_t i = 1; i < 5; ++i) {
    for (std::size_t j = 1; j < 5; ++j) pa.set(i, j), ga.set(i, j);
  }
  for (std::size_t i = 2; i < 4; ++i) {
    for (std::size_t j = 2; j < 4; ++j) pb.set(i, j);
    for (std::size_t j = 2; j < 5; ++j) gb.set(i, j);
  }
  pc.set(0, 0);
  gc.set(3, 0);
  save_mask(pa, dir / "pred/a.png");
  save_mask(ga, dir / "gt/a.png");
  save_mask(pb, dir / "pred/b.png");
  save_mask(gb, dir / "gt/b.png");
  save_mask(pc, dir / "pred/c.png");
  save_mask(gc, dir / "gt/c.png");
  const auto r = run_cli({"evaluate", "--input", (dir / "pred").string(), "--gt", (dir / "gt").string(), "--out",
                          (dir / "out").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(slurp(dir / "out/metrics.csv"),
            "id,dice,jaccard,hd95\n"
            "a,1.000000,1.000000,0.000000\n"
            "b,0.800000,0.666667,1.000000\n"
            "c,0.000000,0.000000,3.000000\n"
            "mean±std,0.600±0.529,0.556±0.509,1.333±1.528\n");

  fs::remove(dir / "gt/c.png");
  const auto miss = run_cli({"evaluate", "--input", (dir / "pred").string(), "--gt", (dir / "gt").string(), "--out",
                             (dir / "out2").string()});
  EXPECT_NE(miss.code, 0);
  EXPECT_NE(miss.err.find("c (no ground truth)"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Noise, ZeroSigmaAndSeeds) {
  const fs::path dir = oracle::scratch_dir("cli_noise");
  write_disk(dir / "img", "", "p", 20, 0.0);
  write_disk(dir / "img", "", "q", 24, 1.0);
  ASSERT_EQ(run_cli({"noise", "--input", (dir / "img").string(), "--out", (dir / "z").string(), "--sigma", "0"}).code, 0);
  for (const char* id : {"p.png", "q.png"}) {
    const RawImage a = read_image(dir / "img" / id), b = read_image(dir / "z" / id);
    EXPECT_EQ(a.gray, b.gray);
  }
  ASSERT_EQ(run_cli({"noise", "--input", (dir / "img/*.png").string(), "--out", (dir / "n").string(), "--sigma",
                     "0.2", "--seed", "5"})
                .code,
            0);
  const json m = read_json(dir / "n/noise_manifest.json");
  EXPECT_EQ(m["images"]["p"]["seed"].get<std::uint64_t>(), image_seed("p", 5));
  EXPECT_EQ(m["images"]["q"]["seed"].get<std::uint64_t>(), image_seed("q", 5));
  EXPECT_EQ(read_image(dir / "n/q.png").width, 24u);
  fs::remove_all(dir);
}

TEST(Bench, WritesRows) {
  const fs::path dir = oracle::scratch_dir("cli_bench");
  const auto r = run_cli({"bench", "--out", dir.string(), "--size", "32"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(dir / "bench.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 11);
  EXPECT_EQ(csv.rfind("id,size,f_seconds,t_seconds,metrics_seconds\ndisk_000,32,", 0), 0u);
  fs::remove_all(dir);
}

TEST(Bench, TimeScalesWithPixels) {
  auto median_time = [](std::size_t n) {
    RunConfig cfg;
    cfg.size = n;
    cfg.count = 3;
    std::vector<double> t;
    for (const auto& row : cli::run_bench(cfg)) t.push_back(row.f_seconds + row.t_seconds);
    std::sort(t.begin(), t.end());
    return t[1];
  };
  const double ratio = median_time(181) / median_time(128);
  EXPECT_GT(ratio, 0.5);
  EXPECT_LT(ratio, 16.0);
}

TEST(Bench, TailoredTimeGrowsWithCaps) {
  const GridSpec g = GridSpec::with_spacing(96, 96, PipelineParams{}.spacing);
  const ScalarField f = make_centered_disk(g);
  TfpmParams lo, hi;
  lo.tol = hi.tol = 1e-300;
  lo.bicgstab_max_iters = {1, 1, 1, 1, 1};
  hi.bicgstab_max_iters = {40, 40, 40, 40, 40};
  auto timed = [&](const TfpmParams& p) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto [u, rec] = tfpm_solve(f, f, p);
    int iters = 0;
    for (const auto& r : rec) iters += r.solve.iterations;
    return std::pair{std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), iters};
  };
  const auto [t_lo, i_lo] = timed(lo);
  const auto [t_hi, i_hi] = timed(hi);
  EXPECT_GT(i_hi, i_lo);
  EXPECT_GT(t_hi, t_lo);
}
