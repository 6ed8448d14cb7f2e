#pragma once

#include "herd/errors.hpp"
#include "herd/grid.hpp"
#include "herd/market.hpp"
#include "herd/merton.hpp"
#include "herd/solver.hpp"
#include "herd/opinion.hpp"
#include "herd/objective.hpp"
#include "herd/simulate.hpp"
#include "herd/sensitivity.hpp"
#include "herd/io.hpp"
#include "herd/commands.hpp"
