// Umbrella header.

#pragma once

#include "dzo/config.hpp"
#include "dzo/consensus.hpp"
#include "dzo/csv.hpp"
#include "dzo/engine.hpp"
#include "dzo/estimators.hpp"
#include "dzo/harness.hpp"
#include "dzo/kernel.hpp"
#include "dzo/metrics.hpp"
#include "dzo/noise.hpp"
#include "dzo/problems.hpp"
#include "dzo/rng.hpp"
#include "dzo/topology.hpp"
