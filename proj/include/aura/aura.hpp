#pragma once

#include "aura/core.hpp"
#include "aura/rng.hpp"
#include "aura/image_io.hpp"
#include "aura/sampler.hpp"
#include "aura/process.hpp"
#include "aura/inpaint.hpp"
#include "aura/judge.hpp"
#include "aura/parallel.hpp"
#include "aura/importance.hpp"
#include "aura/candidate.hpp"
#include "aura/config.hpp"
#include "aura/pipeline.hpp"
#include "aura/metrics.hpp"
#include "aura/harness.hpp"
