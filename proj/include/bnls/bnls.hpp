#pragma once

#include "bnls/model.hpp"
#include "bnls/tridiagonal.hpp"
#include "bnls/radial_grid.hpp"
#include "bnls/functionals.hpp"
#include "bnls/ground_state.hpp"
#include "bnls/dynamics.hpp"
#include "bnls/diagnostics.hpp"
#include "bnls/checkpoint.hpp"
#include "bnls/config.hpp"
#include "bnls/csv.hpp"
#include "bnls/runner.hpp"
