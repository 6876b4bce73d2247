#pragma once

#include "beam.hpp"
#include "builtins.hpp"
#include "coefficients.hpp"
#include "dynamics.hpp"
#include "estimator.hpp"
#include "field_grid.hpp"
#include "hopping.hpp"
#include "jet.hpp"
#include "linalg.hpp"
#include "oracles.hpp"
#include "problems.hpp"
#include "ref_solver.hpp"
#include "rng.hpp"
#include "sampler.hpp"
