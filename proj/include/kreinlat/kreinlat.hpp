#pragma once

#include "core.hpp"
#include "jet.hpp"
#include "lattice.hpp"
#include "spectral.hpp"
#include "krein.hpp"
#include "funcalc.hpp"
#include "models.hpp"
#include "propagator.hpp"
#include "diagnostics.hpp"
#include "states.hpp"
#include "scenario.hpp"
