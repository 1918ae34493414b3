#pragma once

// Levenberg-Marquardt solvers for nonlinear least squares with adaptive
// Hölder-exponent regularisation, nonmonotone globalisation (line search and
// trust region), a reaction-network problem library, and a performance-profile
// benchmark harness.

#include "holm/bench.hpp"
#include "holm/bio.hpp"
#include "holm/config.hpp"
#include "holm/core.hpp"
#include "holm/io.hpp"
#include "holm/lmls.hpp"
#include "holm/lmtr.hpp"
#include "holm/problems.hpp"
#include "holm/solvers.hpp"
#include "holm/types.hpp"
