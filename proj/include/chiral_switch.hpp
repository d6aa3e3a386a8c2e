#pragma once

#include "chiral_switch/error.hpp"
#include "chiral_switch/propagator.hpp"
#include "chiral_switch/pulse.hpp"
#include "chiral_switch/scheme.hpp"
#include "chiral_switch/schemes.hpp"
#include "chiral_switch/spectral.hpp"
#include "chiral_switch/state.hpp"
#include "chiral_switch/units.hpp"
