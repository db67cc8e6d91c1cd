#pragma once

#include "errors.hpp"
#include "config.hpp"
#include "report.hpp"
#include "lattice_gaussian.hpp"
#include "io.hpp"
#include "chaos_algebra.hpp"
#include "malliavin_ops.hpp"
#include "propagators.hpp"
#include "mc.hpp"
#include "estimates.hpp"
#include "sobolev.hpp"
#include "solver.hpp"
