#pragma once

// Umbrella header for the twedge library: deterministic Marchenko-Pastur edge
// quantities, elliptical sample-covariance simulation, Tracy-Widom reference
// services, and the Monte-Carlo experiment drivers.

#include "twedge/errors.hpp"
#include "twedge/rng.hpp"
#include "twedge/stats.hpp"
#include "twedge/model.hpp"
#include "twedge/mp_law.hpp"
#include "twedge/sampler.hpp"
#include "twedge/spectral.hpp"
#include "twedge/parallel.hpp"
#include "twedge/tw_reference.hpp"
#include "twedge/experiments.hpp"
