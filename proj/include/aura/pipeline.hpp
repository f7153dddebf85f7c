#pragma once

// End-to-end mask generation: sample masks around the target, score each with
// the judge, estimate the importance map, threshold it into candidates and
// keep the best-scoring one.

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <string>

#include <nlohmann/json.hpp>

#include "aura/candidate.hpp"
#include "aura/config.hpp"
#include "aura/core.hpp"
#include "aura/image_io.hpp"
#include "aura/importance.hpp"
#include "aura/inpaint.hpp"
#include "aura/judge.hpp"
#include "aura/sampler.hpp"

namespace aura {

struct AuraResult {
  ImportanceMap importance;
  CandidateSet candidates;
  Image completed;
  JudgeBreakdown tight_mask_score;  // judge of complement(L) itself
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

inline AuraResult run_aura(const Image& image, const HoleMask& target, const PipelineConfig& cfg,
                           const ProgressFn& progress = {}) {
  cfg.validate();
  require_same_size(image.size(), target.size(), "run_aura");
  if (area(target) == 0) throw std::invalid_argument("no removal target: mask is empty");

  const Judge judge(image, target, cfg.oracles());
  const MaskBatch batch = sample_batch(target, cfg.sampler_config());

  AuraResult r;
  r.importance = estimate_importance(batch, judge, EstimateOptions{cfg.workers, progress});
  r.candidates = select_best(generate_candidates(r.importance, target, cfg.p_max, cfg.rank_policy),
                             judge, cfg.workers);
  r.completed = complete(image, complement(r.candidates.selected().mask), cfg.inpainter);
  r.tight_mask_score = judge(complement(target));
  return r;
}

inline nlohmann::json score_report(const AuraResult& r, const HoleMask& target,
                                   const PipelineConfig& cfg) {
  const auto& sel = r.candidates.selected();
  nlohmann::json candidates = nlohmann::json::array();
  for (const auto& c : r.candidates.candidates) {
    candidates.push_back({{"percentile", c.percentile},
                          {"threshold", c.threshold},
                          {"hole_area", area(c.mask)},
                          {"contains_target", c.contains_target},
                          {"score", c.score}});
  }
  return {{"config", cfg},
          {"image", {{"height", target.height()}, {"width", target.width()}}},
          {"target_area", area(target)},
          {"n_samples", r.importance.samples},
          {"selected",
           {{"index", r.candidates.selected_index},
            {"percentile", sel.percentile},
            {"hole_area", area(sel.mask)},
            {"hole_fraction", static_cast<double>(area(sel.mask)) / target.pixel_count()},
            {"contains_target", sel.contains_target},
            {"score", sel.score}}},
          {"tight_mask_score", r.tight_mask_score},
          {"importance_mean_std_error", r.importance.mean_std_error()},
          {"candidates", candidates}};
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline void write_importance_artifacts(const std::filesystem::path& dir, const ImportanceMap& map,
                                       std::uint64_t seed) {
  std::filesystem::create_directories(dir);
  write_importance(dir / "importance.bin", map, seed);
  save_image(dir / "importance.png", heatmap(map));
  write_json(dir / "importance_legend.json", heatmap_legend(map));
}

// importance.bin, importance.png (+ legend), candidates/, aura_mask.pgm,
// completed.png, report.json, config.json.
inline void write_generate_artifacts(const std::filesystem::path& dir, const AuraResult& r,
                                     const HoleMask& target, const PipelineConfig& cfg) {
  std::filesystem::create_directories(dir);
  write_importance_artifacts(dir, r.importance, cfg.seed);
  write_candidate_set(dir / "candidates", r.candidates);
  save_mask(dir / "aura_mask.pgm", r.candidates.selected().mask);
  save_image(dir / "completed.png", r.completed);
  write_json(dir / "report.json", score_report(r, target, cfg));
  write_json(dir / "config.json", cfg);
}

}  // namespace aura
