#pragma once

#include "fracvi/grid.hpp"
#include "fracvi/summation.hpp"
#include "fracvi/diffops.hpp"
#include "fracvi/fracops.hpp"
#include "fracvi/lagrangian.hpp"
#include "fracvi/schemes.hpp"
#include "fracvi/linalg.hpp"
#include "fracvi/solver.hpp"
#include "fracvi/experiments.hpp"
