#pragma once

// Resolved pipeline settings and their JSON form. Flags override file values;
// the resolved document is echoed next to the outputs so a run can be repeated
// from it.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "aura/candidate.hpp"
#include "aura/image_io.hpp"
#include "aura/inpaint.hpp"
#include "aura/judge.hpp"
#include "aura/parallel.hpp"
#include "aura/sampler.hpp"

namespace aura {

struct PipelineConfig {
  SamplerConfig sampler;
  InpainterSpec inpainter;
  DetectorSpec detector;
  MetricSpec metric;
  double lambda_a = 90000.0;
  double lambda_d = 0.5;
  int p_max = 20;
  int workers = 1;
  std::uint64_t seed = 0;
  RankPolicy rank_policy = RankPolicy::kAnchorTarget;
  std::string out = "aura_out";

  // Sampler config with the pipeline seed applied.
  SamplerConfig sampler_config() const {
    SamplerConfig s = sampler;
    s.seed = seed;
    return s;
  }

  JudgeOracles oracles() const { return {inpainter, detector, metric, lambda_a, lambda_d}; }

  void validate() const {
    sampler_config().validate();
    inpainter.validate();
    detector.validate();
    metric.validate();
    if (p_max < 1 || p_max > 100) throw std::invalid_argument("p_max must be in [1, 100]");
    if (workers < 1) throw std::invalid_argument("workers must be >= 1");
    if (!std::isfinite(lambda_a) || !std::isfinite(lambda_d)) {
      throw std::invalid_argument("lambda weights must be finite");
    }
  }
};

inline std::string to_string(RankPolicy p) {
  return p == RankPolicy::kAnchorTarget ? "anchor-target" : "value-only";
}

inline RankPolicy rank_policy_from_string(const std::string& s) {
  if (s == "anchor-target") return RankPolicy::kAnchorTarget;
  if (s == "value-only") return RankPolicy::kValueOnly;
  throw std::invalid_argument("unknown rank policy: " + s);
}

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
  nlohmann::json sampler = c.sampler;
  sampler.erase("seed");
  j = nlohmann::json{{"sampler", sampler},
                     {"inpainter", c.inpainter},
                     {"detector", c.detector},
                     {"metric", c.metric},
                     {"lambda_a", c.lambda_a},
                     {"lambda_d", c.lambda_d},
                     {"p_max", c.p_max},
                     {"workers", c.workers},
                     {"seed", c.seed},
                     {"rank_policy", to_string(c.rank_policy)},
                     {"out", c.out}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
  if (j.contains("sampler")) {
    SamplerConfig s = c.sampler;
    from_json(j.at("sampler"), s);
    c.sampler = s;
  }
  if (j.contains("inpainter")) from_json(j.at("inpainter"), c.inpainter);
  if (j.contains("detector")) from_json(j.at("detector"), c.detector);
  if (j.contains("metric")) from_json(j.at("metric"), c.metric);
  c.lambda_a = j.value("lambda_a", c.lambda_a);
  c.lambda_d = j.value("lambda_d", c.lambda_d);
  c.p_max = j.value("p_max", c.p_max);
  c.workers = j.value("workers", c.workers);
  c.seed = j.value("seed", c.seed);
  if (j.contains("rank_policy")) c.rank_policy = rank_policy_from_string(j.at("rank_policy"));
  c.out = j.value("out", c.out);
}

inline PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  PipelineConfig c;
  c.workers = default_workers();
  try {
    from_json(j, c);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("config " + path.string() + ": " + e.what());
  }
  return c;
}

// Oracle selectors in flag form: "mean", "diffusion", "external:<cmd>".
inline void apply_inpainter_flag(InpainterSpec& s, const std::string& flag) {
  if (flag.rfind("external:", 0) == 0) {
    s.kind = InpainterKind::kExternal;
    s.command = flag.substr(9);
  } else {
    s.kind = inpainter_kind_from_string(flag);
  }
}

inline void apply_detector_flag(DetectorSpec& s, const std::string& flag) {
  if (flag.rfind("external:", 0) == 0) {
    s.kind = DetectorKind::kExternal;
    s.command = flag.substr(9);
  } else {
    s.kind = detector_kind_from_string(flag);
  }
}

inline void apply_metric_flag(MetricSpec& s, const std::string& flag) {
  if (flag.rfind("external:", 0) == 0) {
    s.kind = MetricKind::kExternal;
    s.command = flag.substr(9);
  } else {
    s.kind = metric_kind_from_string(flag);
  }
}

}  // namespace aura
