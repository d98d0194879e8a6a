#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tfsim {

// Uniformly sampled phase record, radians.
//
// The provenance string records how the samples were made (generator, seed,
// stream label) and travels into CSV headers so any exported trace can be
// regenerated exactly.
struct PhaseTrace {
    std::vector<double> samples;   // phase, rad
    double sample_rate_hz = 0.0;
    double t0_s = 0.0;             // time of samples[0]
    std::string provenance;

    std::size_t size() const { return samples.size(); }
    double duration_s() const {
        return sample_rate_hz > 0.0 ? static_cast<double>(samples.size()) / sample_rate_hz
                                    : 0.0;
    }

    void validate() const {
        if (sample_rate_hz <= 0.0)
            throw std::invalid_argument("PhaseTrace: sample_rate_hz must be > 0");
        if (samples.size() < 2)
            throw std::invalid_argument("PhaseTrace: need at least 2 samples");
    }
};

} // namespace tfsim
