#pragma once

#include "core.hpp"
#include "csv.hpp"
#include "rng.hpp"
#include "synth.hpp"
#include "linalg.hpp"
#include "features.hpp"
#include "metrics.hpp"
#include "lstm.hpp"
#include "simplex.hpp"
#include "lp_kpi.hpp"
#include "baselines.hpp"
#include "pipeline.hpp"
