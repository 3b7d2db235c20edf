#pragma once

#include "errors.hpp"
#include "numeric.hpp"
#include "geometry.hpp"
#include "rng.hpp"
#include "parallel.hpp"
#include "sampling.hpp"
#include "discrepancy.hpp"
#include "optimize.hpp"
#include "report.hpp"
#include "experiments.hpp"
