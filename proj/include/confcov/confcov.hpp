#pragma once

#include "confcov/error.hpp"
#include "confcov/estimators.hpp"
#include "confcov/experiment.hpp"
#include "confcov/io.hpp"
#include "confcov/linalg.hpp"
#include "confcov/metrics.hpp"
#include "confcov/nodewise.hpp"
#include "confcov/pc.hpp"
#include "confcov/random.hpp"
#include "confcov/simulation.hpp"
