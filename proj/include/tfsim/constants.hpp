#pragma once

namespace tfsim {

// Physical constants and fixed conventions used across the simulator.
namespace constants {

// Speed of light in vacuum, m/s.
inline constexpr double c_vacuum = 2.998e8;

// Fiber group index used for all propagation-delay arithmetic.
inline constexpr double fiber_group_index = 1.468;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// One-way propagation delay through length_m of fiber, seconds.
inline constexpr double fiber_delay_s(double length_m) {
    return fiber_group_index * length_m / c_vacuum;
}

} // namespace constants
} // namespace tfsim
