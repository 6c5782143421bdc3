#pragma once

#include "wiretap/solver/secrecy.hpp"

namespace wiretap {

/**
 * Brute-force reference: exhaustive scan over a low-dimensional covariance
 * family. Supported sizes: SISO (direct power grid) and nt = 2 with
 * single-antenna receivers (rank-one angle/power families). resolution = grid
 * points per axis, raised to 100 when a smaller value is passed.
 *
 * Throws std::invalid_argument for channel shapes with more scan dimensions
 * than the families cover.
 */
SecrecySolution oracle_grid(const WiretapChannel& ch, const PowerSpec& spec, Scheme scheme,
                            int resolution = 200);

}  // namespace wiretap
