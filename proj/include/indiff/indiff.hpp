#pragma once

#include "indiff/error.hpp"
#include "indiff/model.hpp"
#include "indiff/weyl.hpp"
#include "indiff/operators.hpp"
#include "indiff/hermite.hpp"
#include "indiff/quadrature.hpp"
#include "indiff/gaussian.hpp"
#include "indiff/black_scholes.hpp"
#include "indiff/traded.hpp"
#include "indiff/implied_vol.hpp"
#include "indiff/nontraded.hpp"
#include "indiff/convergence.hpp"
#include "indiff/oracles/grid.hpp"
#include "indiff/oracles/fd1d.hpp"
#include "indiff/oracles/fd2d.hpp"
#include "indiff/oracles/heston_exact.hpp"
#include "indiff/oracles/monte_carlo.hpp"
#include "indiff/config.hpp"
