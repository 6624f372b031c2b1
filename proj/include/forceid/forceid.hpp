#pragma once

#include "forceid/errors.hpp"
#include "forceid/tolerances.hpp"
#include "forceid/linalg.hpp"
#include "forceid/model.hpp"
#include "forceid/bem.hpp"
#include "forceid/noise.hpp"
#include "forceid/inverse.hpp"
#include "forceid/csv.hpp"
#include "forceid/registry.hpp"
#include "forceid/experiment.hpp"
