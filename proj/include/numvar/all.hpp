#pragma once

#include "numvar/acceptance.hpp"
#include "numvar/error.hpp"
#include "numvar/gp_limit.hpp"
#include "numvar/io.hpp"
#include "numvar/numvar_analytic.hpp"
#include "numvar/particle_sim.hpp"
#include "numvar/quadrature.hpp"
#include "numvar/rng.hpp"
#include "numvar/stable_core.hpp"
#include "numvar/version.hpp"
