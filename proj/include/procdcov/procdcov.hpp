#pragma once

#include "dcov_alpha.hpp"
#include "dcov_density.hpp"
#include "experiments.hpp"
#include "gaussian_sim.hpp"
#include "grid.hpp"
#include "io.hpp"
#include "kernels.hpp"
#include "reference.hpp"
#include "rng.hpp"
#include "szekely.hpp"
