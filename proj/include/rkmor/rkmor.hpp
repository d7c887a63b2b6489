#pragma once

#include "rkmor/analysis.hpp"
#include "rkmor/balancer.hpp"
#include "rkmor/benchmarks.hpp"
#include "rkmor/matrix_market.hpp"
#include "rkmor/quadrature.hpp"
#include "rkmor/shifted_solver.hpp"
#include "rkmor/system.hpp"
#include "rkmor/tableau.hpp"
#include "rkmor/types.hpp"
