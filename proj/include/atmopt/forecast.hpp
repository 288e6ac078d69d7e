#pragma once

#include <string>
#include <vector>

#include "atmopt/common.hpp"

namespace atmopt {

/**
 * Model-agnostic forecast over a fixed horizon.  expected(h) is the
 * predicted withdrawal for day h (clamped at zero), dispersion(h) an
 * estimate of its spread used to size safety buffers.
 */
struct ForecastResult {
    std::size_t horizon = 0;
    std::vector<double> expected;
    std::vector<double> dispersion;
    std::string model_tag;
};

}  // namespace atmopt
