#pragma once

#include "hetsca/driver.hpp"
#include "hetsca/errors.hpp"
#include "hetsca/experiment.hpp"
#include "hetsca/linalg.hpp"
#include "hetsca/network.hpp"
#include "hetsca/random.hpp"
#include "hetsca/rate.hpp"
#include "hetsca/solvers.hpp"
#include "hetsca/surrogate.hpp"
