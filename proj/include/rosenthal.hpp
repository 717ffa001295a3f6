#pragma once

#include "rosenthal/errors.hpp"
#include "rosenthal/core_measures.hpp"
#include "rosenthal/poisson_moments.hpp"
#include "rosenthal/compound_moments.hpp"
#include "rosenthal/variational.hpp"
#include "rosenthal/extremal_bounds.hpp"
#include "rosenthal/verifier.hpp"
