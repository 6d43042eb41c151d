#ifndef TBC_TBC_HPP
#define TBC_TBC_HPP

#include "tbc/analytic.hpp"
#include "tbc/config.hpp"
#include "tbc/errors.hpp"
#include "tbc/experiments.hpp"
#include "tbc/functionals.hpp"
#include "tbc/geometry.hpp"
#include "tbc/io.hpp"
#include "tbc/kwise.hpp"
#include "tbc/params.hpp"
#include "tbc/rng.hpp"
#include "tbc/sampling.hpp"
#include "tbc/spatial_grid.hpp"
#include "tbc/stats.hpp"
#include "tbc/vec.hpp"

#endif  // TBC_TBC_HPP
