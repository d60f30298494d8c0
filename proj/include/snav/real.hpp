#pragma once

// The learning stack (autodiff, layers, agents, trainer) is compiled
// twice: once with float for training and once with double for
// finite-difference gradient checks. Each build lives in its own inline
// namespace so both can be linked into one binary.
#if defined(SNAV_DOUBLE)
#define SNAV_REAL_NS f64
#else
#define SNAV_REAL_NS f32
#endif

namespace snav::inline SNAV_REAL_NS {

#if defined(SNAV_DOUBLE)
using real = double;
#else
using real = float;
#endif

}  // namespace snav::inline SNAV_REAL_NS
