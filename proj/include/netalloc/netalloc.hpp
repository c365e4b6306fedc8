#pragma once

// Umbrella header. experiment.hpp additionally needs vendor/json.hpp.

#include "netalloc/allocate.hpp"
#include "netalloc/bounds.hpp"
#include "netalloc/common.hpp"
#include "netalloc/dynamics.hpp"
#include "netalloc/exact.hpp"
#include "netalloc/experiment.hpp"
#include "netalloc/meanfield.hpp"
#include "netalloc/model.hpp"
#include "netalloc/network.hpp"
