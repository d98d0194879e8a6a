#pragma once

#include "tfsim/analysis.hpp"
#include "tfsim/detect.hpp"
#include "tfsim/interference.hpp"
#include "tfsim/trace.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace tfsim::csvio {

/// Resolution of the integer timestamp column in count records.
constexpr double kTickSeconds = 150e-12;

// All writers emit LF-terminated, comma-separated text with a single header
// row, optionally preceded by '#'-prefixed metadata lines (run hash, seed,
// sample rate, ...).  Floating-point cells use %.12g; count timestamps
// additionally carry an integer 150 ps tick.  Readers skip '#' lines.

using Metadata = std::vector<std::string>;

/// Columns: time_s, phase_rad.  `stride > 1` keeps every stride-th sample
/// (for previews of long traces); 0 or 1 writes everything.
void write_trace_csv(const std::filesystem::path& path, const PhaseTrace& trace,
                     std::size_t stride = 1, const Metadata& metadata = {});

/// Columns: time_s, intensity.
void write_pattern_csv(const std::filesystem::path& path,
                       const interference::InterferencePattern& pattern,
                       std::size_t stride = 1, const Metadata& metadata = {});

/// Columns: freq_hz, psd_rad2_per_hz.
void write_psd_csv(const std::filesystem::path& path, const analysis::Psd& psd,
                   const Metadata& metadata = {});

/// Columns: t_a_s, sigma_rad, subsets, low_confidence.
void write_sigma_csv(const std::filesystem::path& path,
                     const analysis::SigmaCurve& curve, const Metadata& metadata = {});

/// Columns: e, method, sigma_phi_rad, uncertainty, out_of_domain (one row).
void write_qber_csv(const std::filesystem::path& path,
                    const analysis::QberEstimate& estimate,
                    const Metadata& metadata = {});

/// Columns: tick_150ps, time_s, detector.
void write_counts_csv(const std::filesystem::path& path,
                      const detect::CountRecord& record,
                      const Metadata& metadata = {});

/// Inverse of write_trace_csv (stride 1): reconstructs the sample rate from
/// the time column and checks that it is uniform.
PhaseTrace read_trace_csv(const std::filesystem::path& path);

/// Inverse of write_psd_csv; the sample rate is taken as twice the highest
/// frequency bin (our spectra always extend to Nyquist).
analysis::Psd read_psd_csv(const std::filesystem::path& path);

/// Inverse of write_sigma_csv (crossings are not stored in the CSV and are
/// left empty).
analysis::SigmaCurve read_sigma_csv(const std::filesystem::path& path);

/// FNV-1a 64-bit checksum of a file's raw bytes.
std::uint64_t file_checksum(const std::filesystem::path& path);

/// The same checksum rendered as a fixed-width hex string for manifests.
std::string checksum_hex(std::uint64_t checksum);

} // namespace tfsim::csvio
