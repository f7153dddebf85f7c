// aura: mask generation, benchmarking and debugging entry points.
//
// Exit codes: 0 success, 1 acceptance failure (bench), 2 input error,
// 3 oracle error.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aura/aura.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitAcceptance = 1;
constexpr int kExitInput = 2;
constexpr int kExitOracle = 3;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> n_samples;
  std::optional<int> p_max;
  std::optional<double> lambda_a;
  std::optional<double> lambda_d;
  std::string inpainter;
  std::string detector;
  std::string metric;
  std::optional<int> workers;
  std::string out;
};

void add_pipeline_flags(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override its values");
  app->add_option("--seed", f.seed, "RNG seed");
  app->add_option("--n-samples", f.n_samples, "number of sampled masks");
  app->add_option("--p-max", f.p_max, "largest candidate percentile");
  app->add_option("--lambda-a", f.lambda_a, "afterimage weight");
  app->add_option("--lambda-d", f.lambda_d, "detection weight");
  app->add_option("--inpainter", f.inpainter, "mean | diffusion | external:<cmd>");
  app->add_option("--detector", f.detector, "null | residual | external:<cmd>");
  app->add_option("--metric", f.metric, "l2 | patch-stats | external:<cmd>");
  app->add_option("--workers", f.workers, "worker threads (default: AURA_WORKERS or core count)");
  app->add_option("--out", f.out, "output directory");
}

aura::PipelineConfig resolve(const Flags& f, aura::PipelineConfig base) {
  aura::PipelineConfig c = f.config.empty() ? base : aura::load_config(f.config);
  if (f.config.empty()) c.workers = aura::default_workers();
  if (!f.metric.empty()) aura::apply_metric_flag(c.metric, f.metric);
  if (f.seed) c.seed = *f.seed;
  if (f.n_samples) c.sampler.n_samples = *f.n_samples;
  if (f.p_max) c.p_max = *f.p_max;
  if (f.lambda_a) c.lambda_a = *f.lambda_a;
  if (f.lambda_d) c.lambda_d = *f.lambda_d;
  if (!f.inpainter.empty()) aura::apply_inpainter_flag(c.inpainter, f.inpainter);
  if (!f.detector.empty()) aura::apply_detector_flag(c.detector, f.detector);
  if (f.workers) c.workers = *f.workers;
  if (!f.out.empty()) c.out = f.out;
  c.validate();
  return c;
}

void echo_config(const aura::PipelineConfig& c) {
  std::cerr << "config: " << nlohmann::json(c).dump() << '\n';
}

aura::ProgressFn progress_printer() {
  return [last = std::size_t{0}](std::size_t done, std::size_t total) mutable {
    // about 50 updates per run
    if (done != total && done - last < std::max<std::size_t>(1, total / 50)) return;
    last = done;
    std::cerr << "\rsamples " << done << '/' << total << (done == total ? "\n" : "") << std::flush;
  };
}

struct Inputs {
  aura::Image image;
  aura::HoleMask target;
};

Inputs load_inputs(const std::string& image_path, const std::string& mask_path) {
  Inputs in{aura::load_image(image_path), aura::load_hole_mask(mask_path)};
  aura::require_same_size(in.image.size(), in.target.size(), "image and mask");
  if (aura::area(in.target) == 0) throw std::invalid_argument("no removal target: mask is empty");
  return in;
}

int cmd_generate(const std::string& image, const std::string& mask, const Flags& f) {
  const auto in = load_inputs(image, mask);
  const auto cfg = resolve(f, aura::PipelineConfig{});
  echo_config(cfg);
  const auto r = aura::run_aura(in.image, in.target, cfg, progress_printer());
  aura::write_generate_artifacts(cfg.out, r, in.target, cfg);
  const auto& sel = r.candidates.selected();
  std::cerr << "selected P=" << sel.percentile << " hole area " << aura::area(sel.mask)
            << " total " << sel.score.total << " -> " << cfg.out << '\n';
  return kExitOk;
}

int cmd_importance(const std::string& image, const std::string& mask, const Flags& f) {
  const auto in = load_inputs(image, mask);
  const auto cfg = resolve(f, aura::PipelineConfig{});
  echo_config(cfg);
  const aura::Judge judge(in.image, in.target, cfg.oracles());
  const auto map = aura::estimate_importance(aura::sample_batch(in.target, cfg.sampler_config()), judge,
                                             aura::EstimateOptions{cfg.workers, progress_printer()});
  aura::write_importance_artifacts(cfg.out, map, cfg.seed);
  aura::write_json(fs::path(cfg.out) / "config.json", cfg);
  return kExitOk;
}

int cmd_judge(const std::string& image, const std::string& mask, const std::string& holes_path,
              const Flags& f) {
  const auto in = load_inputs(image, mask);
  const auto cfg = resolve(f, aura::PipelineConfig{});
  echo_config(cfg);
  const aura::HoleMask holes = holes_path.empty() ? in.target : aura::load_hole_mask(holes_path);
  aura::require_same_size(holes.size(), in.target.size(), "holes and mask");
  const aura::Judge judge(in.image, in.target, cfg.oracles());
  const auto score = judge.score_holes(holes);
  fs::create_directories(cfg.out);
  aura::write_json(fs::path(cfg.out) / "judge.json",
                   {{"score", score}, {"hole_area", aura::area(holes)}, {"target_area", aura::area(in.target)}});
  aura::save_image(fs::path(cfg.out) / "completed.png",
                   aura::complete(in.image, aura::complement(holes), cfg.inpainter));
  aura::write_json(fs::path(cfg.out) / "config.json", cfg);
  std::cerr << "judge total " << score.total << '\n';
  return kExitOk;
}

struct BenchFlags {
  int scenes = 10;
  int seeds = 3;
  std::vector<int> kernels = {0, 10, 20, 30, 40};
  std::optional<int> halo;
};

int cmd_bench(const BenchFlags& b, const Flags& f) {
  aura::MetricSpec metric;
  if (!f.metric.empty()) aura::apply_metric_flag(metric, f.metric);
  aura::BenchOptions opts;
  opts.scenes = b.scenes;
  opts.seeds = b.seeds;
  opts.kernel_sizes = b.kernels;
  opts.halo = b.halo;
  opts.config = resolve(f, aura::bench_config(metric.kind));
  if (f.out.empty()) opts.config.out = "aura_bench";
  echo_config(opts.config);
  opts.artifact_dir = fs::path(opts.config.out) / "scenes";
  opts.log = [](const std::string& s) { std::cerr << s << '\n'; };

  const auto rep = aura::run_bench(opts);
  fs::create_directories(opts.config.out);
  aura::write_report_csv(fs::path(opts.config.out) / "report.csv", rep);
  const std::string table = aura::format_report_table(rep);
  {
    std::ofstream txt(fs::path(opts.config.out) / "report.txt");
    txt << table;
  }
  aura::write_json(fs::path(opts.config.out) / "config.json", opts.config);
  std::cout << table;

  bool ok = true;
  std::cout << '\n';
  if (std::find(b.kernels.begin(), b.kernels.end(), 0) == b.kernels.end()) {
    std::cerr << "dominance check needs kernel size 0 in the sweep\n";
    return kExitInput;
  }
  const auto d = aura::check_dominance(rep, b.kernels);
  std::cout << "aura mean judge total " << d.aura_mean_total << '\n';
  for (const auto& [k, m] : d.baseline_mean_totals) {
    std::cout << "kernel " << k << " mean judge total " << m
              << (d.aura_mean_total > m ? "" : "  <- not beaten") << '\n';
  }
  std::cout << "psnr >= kernel 0 on " << d.psnr_wins << '/' << d.scenes << " scenes\n";
  ok = d.holds();
  if (!ok) {
    std::cout << "\nfailing rows:\n";
    aura::RemovalReport failing;
    for (const auto& r : rep.rows) {
      if (r.mask != "aura") continue;
      for (const auto& k0 : rep.rows) {
        if (k0.scene == r.scene && k0.mask == "kernel_0" && r.psnr < k0.psnr) {
          failing.rows.push_back(k0);
          failing.rows.push_back(r);
        }
      }
    }
    std::cout << aura::format_report_table(failing);
  }
  std::cout << (ok ? "dominance: PASS\n" : "dominance: FAIL\n");
  return ok ? kExitOk : kExitAcceptance;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AURA hole-mask generation"};
  app.require_subcommand(1);

  Flags f;
  std::string image, mask, holes;
  BenchFlags bench;

  auto* gen = app.add_subcommand("generate", "importance map, candidates and the selected mask");
  gen->add_option("--image", image, "input image (PNG/PGM/PPM)")->required();
  gen->add_option("--mask", mask, "target segmentation mask, nonzero = target")->required();
  add_pipeline_flags(gen, f);

  auto* imp = app.add_subcommand("importance-only", "importance map and heatmap only");
  imp->add_option("--image", image)->required();
  imp->add_option("--mask", mask)->required();
  add_pipeline_flags(imp, f);

  auto* jdg = app.add_subcommand("judge-only", "score one hole mask (default: the target mask)");
  jdg->add_option("--image", image)->required();
  jdg->add_option("--mask", mask)->required();
  jdg->add_option("--holes", holes, "hole mask to score");
  add_pipeline_flags(jdg, f);

  auto* bch = app.add_subcommand("bench", "synthetic suite: baselines vs AURA");
  bch->add_option("--scenes", bench.scenes, "number of suite scenes (1-10)");
  bch->add_option("--seeds", bench.seeds, "seed repetitions per scene");
  bch->add_option("--kernel-sizes", bench.kernels, "baseline dilation kernels")->delimiter(',');
  bch->add_option("--halo", bench.halo, "override every scene's halo width");
  add_pipeline_flags(bch, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*gen) return cmd_generate(image, mask, f);
    if (*imp) return cmd_importance(image, mask, f);
    if (*jdg) return cmd_judge(image, mask, holes, f);
    if (*bch) return cmd_bench(bench, f);
  } catch (const aura::OracleError& e) {
    std::cerr << "oracle error: " << e.what() << '\n';
    return kExitOracle;
  } catch (const aura::IoError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const aura::DimensionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitOracle;
  }
  return kExitInput;
}
