#pragma once

#include "puck/core.hpp"

#include <cstddef>
#include <cstdint>

namespace puck {

/// Synthetic crash timeline: a stable quadratic market, then the same well
/// acquiring a cubic term whose barrier sits on the downside, then a crash
/// (steady downward drift plus noise).
struct DemoSpec {
    std::size_t quadratic_length{1000};
    std::size_t cubic_length{2000};
    std::size_t crash_length{300};
    double b_quad{0.6};
    double b_nl{0.3};
    int m{4};
    double sigma{0.3};
    double crash_drift{0.5};  // price drop per tick during the crash
    double start_price{100.0};
};

struct DemoScenario {
    TickSeries series;
    std::size_t cubic_start{0};  // first tick generated by the cubic potential
    std::size_t crash_start{0};  // first tick of the crash segment
    /// The walker crossed the barrier before the planned crash; the crash then
    /// starts at the crossing.
    bool escaped_early{false};
};

[[nodiscard]] DemoScenario make_demo(const DemoSpec& spec, std::uint64_t seed);

}  // namespace puck
