#pragma once

#include "dtof/align.hpp"
#include "dtof/anomaly.hpp"
#include "dtof/config.hpp"
#include "dtof/core.hpp"
#include "dtof/dtof_sim.hpp"
#include "dtof/error.hpp"
#include "dtof/io.hpp"
#include "dtof/metrics.hpp"
#include "dtof/report.hpp"
#include "dtof/rng.hpp"
