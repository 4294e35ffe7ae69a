#pragma once

#include <algorithm>

namespace eqz {

// Saturation bound applied to every LLR that crosses a module boundary
// (equalizer outputs, decoder messages, training labels).
inline constexpr double kLlrClamp = 40.0;

inline double clamp_llr(double v) { return std::clamp(v, -kLlrClamp, kLlrClamp); }

}  // namespace eqz
