#pragma once

// Umbrella header for the nonlinear stochastic integral laboratory.

#include "nlkw/config.hpp"
#include "nlkw/errors.hpp"
#include "nlkw/estimate.hpp"
#include "nlkw/family.hpp"
#include "nlkw/family_checks.hpp"
#include "nlkw/integrators.hpp"
#include "nlkw/kw.hpp"
#include "nlkw/nelder_mead.hpp"
#include "nlkw/objective.hpp"
#include "nlkw/parallel.hpp"
#include "nlkw/parametric.hpp"
#include "nlkw/path.hpp"
#include "nlkw/pipeline.hpp"
#include "nlkw/pointwise.hpp"
#include "nlkw/report.hpp"
#include "nlkw/rng.hpp"
#include "nlkw/strategy.hpp"
#include "nlkw/svg.hpp"
#include "nlkw/time_grid.hpp"
