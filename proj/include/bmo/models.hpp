#pragma once

#include "bmo/models/fit.hpp"
#include "bmo/models/gbt.hpp"
#include "bmo/models/knn.hpp"
#include "bmo/models/mlp.hpp"
#include "bmo/models/model.hpp"
#include "bmo/models/ridge.hpp"
#include "bmo/models/spec.hpp"
