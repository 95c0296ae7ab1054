#pragma once

// Umbrella header.

#include "bmo/baselines.hpp"
#include "bmo/core.hpp"
#include "bmo/data.hpp"
#include "bmo/harness/config.hpp"
#include "bmo/harness/experiment.hpp"
#include "bmo/harness/report.hpp"
#include "bmo/models.hpp"
#include "bmo/selectors.hpp"
