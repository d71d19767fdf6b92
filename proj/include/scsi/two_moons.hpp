#pragma once

#include "scsi/common.hpp"

namespace scsi {

/// Noise-free two moons: upper arc (cos a, sin a) and lower arc (1 - cos a, 0.5 - sin a),
/// a ~ U[0, pi], each point on either arc with probability 1/2. One point per column.
Batch two_moons(Eigen::Index n, Rng& rng);

}  // namespace scsi
