#pragma once

// Candidate hole-masks from an importance map, and judge-based selection.
//
// Candidate j holes the top k_j pixels, k_j = ceil((P_j/100 + A(L)/(H*W)) * H*W)
// for P_j = 1..p. Pixels are ranked by descending importance with row-major
// index as the tie-break, so every k_j is met exactly and the candidates nest.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "aura/core.hpp"
#include "aura/image_io.hpp"
#include "aura/importance.hpp"
#include "aura/judge.hpp"
#include "aura/parallel.hpp"

namespace aura {

// kAnchorTarget ranks every target pixel ahead of all others, so each
// candidate is L plus the P_j% most important remaining pixels.
// kValueOnly ranks purely by importance; containment of L is then only
// reported.
enum class RankPolicy { kAnchorTarget, kValueOnly };

// Pixel order used by all candidates of one map.
class PixelRanking {
 public:
  PixelRanking(const ImportanceMap& map, const HoleMask& target, RankPolicy policy)
      : size_(map.size), values_(&map.values) {
    require_same_size(map.size, target.size(), "PixelRanking");
    order_.resize(map.values.size());
    std::iota(order_.begin(), order_.end(), 0u);
    const auto& v = map.values;
    const bool anchor = policy == RankPolicy::kAnchorTarget;
    std::sort(order_.begin(), order_.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (anchor) {
        const bool ta = target.at_index(a);
        const bool tb = target.at_index(b);
        if (ta != tb) return ta;
      }
      if (v[a] != v[b]) return v[a] > v[b];
      return a < b;
    });
  }

  Size size() const { return size_; }
  std::span<const std::uint32_t> order() const { return order_; }
  double value_at_rank(std::size_t rank) const { return (*values_)[order_[rank]]; }

 private:
  Size size_;
  const std::vector<double>* values_;
  std::vector<std::uint32_t> order_;
};

// Hole count of candidate P_j. Requires 0 < P_j <= 100 - 100*A(L)/(H*W).
inline std::size_t candidate_count(int percentile, std::size_t target_area, std::size_t pixels) {
  if (percentile <= 0) throw std::invalid_argument("percentile must be positive");
  // P*HW/100 + A <= HW, in integers
  const std::size_t scaled = static_cast<std::size_t>(percentile) * pixels;
  if (target_area > pixels || scaled > 100 * (pixels - target_area)) {
    throw std::invalid_argument("percentile " + std::to_string(percentile) +
                                " would mask more than the whole image");
  }
  return target_area + (scaled + 99) / 100;
}

struct Threshold {
  double value = 0.0;
  std::size_t count = 0;
};

inline Threshold percentile_threshold(const PixelRanking& ranking, int percentile,
                                      const HoleMask& target) {
  const std::size_t k = candidate_count(percentile, area(target), ranking.size().pixels());
  return {ranking.value_at_rank(k - 1), k};
}

inline Threshold percentile_threshold(const ImportanceMap& map, int percentile, const HoleMask& target,
                                      RankPolicy policy = RankPolicy::kAnchorTarget) {
  return percentile_threshold(PixelRanking(map, target, policy), percentile, target);
}

// The first `count` pixels of the ranking.
inline HoleMask candidate_mask(const PixelRanking& ranking, std::size_t count) {
  if (count > ranking.size().pixels()) throw std::invalid_argument("candidate_mask: count too large");
  HoleMask m(ranking.size().height, ranking.size().width);
  for (std::size_t r = 0; r < count; ++r) m.set_index(ranking.order()[r], true);
  return m;
}

struct Candidate {
  int percentile = 0;
  double threshold = 0.0;
  HoleMask mask;
  JudgeBreakdown score;
  bool contains_target = false;
};

struct CandidateSet {
  std::vector<Candidate> candidates;
  std::size_t selected_index = 0;

  const Candidate& selected() const { return candidates.at(selected_index); }
};

// Candidates P_j = 1..p_max, unscored.
inline std::vector<Candidate> generate_candidates(const ImportanceMap& map, const HoleMask& target,
                                                  int p_max,
                                                  RankPolicy policy = RankPolicy::kAnchorTarget) {
  if (p_max < 1) throw std::invalid_argument("generate_candidates: p_max must be >= 1");
  const PixelRanking ranking(map, target, policy);
  std::vector<Candidate> out;
  out.reserve(static_cast<std::size_t>(p_max));
  for (int p = 1; p <= p_max; ++p) {
    const auto t = percentile_threshold(ranking, p, target);
    Candidate c;
    c.percentile = p;
    c.threshold = t.value;
    c.mask = candidate_mask(ranking, t.count);
    c.contains_target = is_subset(target, c.mask);
    out.push_back(std::move(c));
  }
  return out;
}

// Index of the largest total; ties go to the smallest index.
inline std::size_t argmax_total(const std::vector<Candidate>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("argmax_total: no candidates");
  std::size_t best = 0;
  for (std::size_t j = 1; j < candidates.size(); ++j) {
    if (candidates[j].score.total > candidates[best].score.total) best = j;
  }
  return best;
}

// Scores each candidate's complement with the judge and picks the best.
template <typename Scorer>
CandidateSet select_best(std::vector<Candidate> candidates, const Scorer& score_keep, int workers = 1) {
  if (candidates.empty()) throw std::invalid_argument("select_best: no candidates");
  parallel_for(candidates.size(), workers, [&](std::size_t j) {
    candidates[j].score = score_keep(complement(candidates[j].mask));
  });
  CandidateSet set;
  set.candidates = std::move(candidates);
  set.selected_index = argmax_total(set.candidates);
  return set;
}

// candidate_01.pgm ... candidate_NN.pgm, scores.jsonl, aura_mask.pgm.
inline void write_candidate_set(const std::filesystem::path& dir, const CandidateSet& set) {
  std::filesystem::create_directories(dir);
  std::ofstream jsonl(dir / "scores.jsonl");
  if (!jsonl) throw IoError("cannot write " + (dir / "scores.jsonl").string());
  for (std::size_t j = 0; j < set.candidates.size(); ++j) {
    const auto& c = set.candidates[j];
    char name[32];
    std::snprintf(name, sizeof(name), "candidate_%02d.pgm", c.percentile);
    save_mask(dir / name, c.mask);
    nlohmann::json row{{"index", j},
                       {"percentile", c.percentile},
                       {"threshold", c.threshold},
                       {"hole_area", area(c.mask)},
                       {"contains_target", c.contains_target},
                       {"background", c.score.background},
                       {"afterimage", c.score.afterimage},
                       {"detect", c.score.detect},
                       {"total", c.score.total},
                       {"selected", j == set.selected_index}};
    jsonl << row.dump() << '\n';
  }
  save_mask(dir / "aura_mask.pgm", set.selected().mask);
}

}  // namespace aura
