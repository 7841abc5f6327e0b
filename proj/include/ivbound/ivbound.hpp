#pragma once

#include "ivbound/dataset.hpp"
#include "ivbound/errors.hpp"
#include "ivbound/estimators.hpp"
#include "ivbound/glm.hpp"
#include "ivbound/rng.hpp"
#include "ivbound/sensitivity.hpp"
#include "ivbound/simgen.hpp"
#include "ivbound/strata.hpp"
#include "ivbound/uncertainty.hpp"
