#pragma once

#include "crossnorm/crosspoly_geometry.hpp"
#include "crossnorm/errors.hpp"
#include "crossnorm/gaussian_mc.hpp"
#include "crossnorm/pq_landscape.hpp"
#include "crossnorm/quadrature.hpp"
#include "crossnorm/rng.hpp"
#include "crossnorm/special_functions.hpp"
#include "crossnorm/supnorm_expectation.hpp"
