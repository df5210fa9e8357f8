#pragma once

// No-trade band optimal investment under proportional transaction costs with
// fast- and slow-scale stochastic volatility corrections.

#include "ntband/basis_sum.hpp"
#include "ntband/constvol.hpp"
#include "ntband/errors.hpp"
#include "ntband/fastscale.hpp"
#include "ntband/io.hpp"
#include "ntband/market.hpp"
#include "ntband/numerics.hpp"
#include "ntband/oracles.hpp"
#include "ntband/simulate.hpp"
#include "ntband/slowscale.hpp"
#include "ntband/validate.hpp"
#include "ntband/vol_model.hpp"
