#pragma once

#include "portrng/burner.hpp"
#include "portrng/calosim.hpp"
#include "portrng/device_rng.hpp"
#include "portrng/distributions.hpp"
#include "portrng/engine.hpp"
#include "portrng/error.hpp"
#include "portrng/execution.hpp"
#include "portrng/metrics.hpp"
