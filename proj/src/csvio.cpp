#include "tfsim/csvio.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace tfsim::csvio {

namespace {

std::string fmt_g(double v) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.12g", v);
    return buf.data();
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open for writing: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open for reading: " + path.string());
    return in;
}

void write_metadata(std::ofstream& out, const Metadata& metadata) {
    for (const auto& line : metadata)
        out << "# " << line << '\n';
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out)
        throw std::runtime_error("write failed: " + path.string());
}

[[noreturn]] void parse_fail(const std::filesystem::path& path, std::size_t line,
                             const std::string& what) {
    throw std::runtime_error(path.string() + ":" + std::to_string(line) + ": " + what);
}

// First non-comment line; `lineno` tracks the position for error messages.
bool next_content_line(std::ifstream& in, std::string& line, std::size_t& lineno) {
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        return true;
    }
    return false;
}

void expect_header(std::ifstream& in, const std::filesystem::path& path,
                   const std::string& expected, std::size_t& lineno) {
    std::string line;
    if (!next_content_line(in, line, lineno))
        parse_fail(path, lineno, "missing header row");
    if (line != expected)
        parse_fail(path, lineno, "expected header '" + expected + "', got '" + line + "'");
}

// Reads all remaining non-comment rows as doubles with a fixed column count.
std::vector<std::vector<double>> read_rows(std::ifstream& in,
                                           const std::filesystem::path& path,
                                           std::size_t columns, std::size_t& lineno) {
    std::vector<std::vector<double>> rows;
    std::string line;
    while (next_content_line(in, line, lineno)) {
        std::vector<double> row;
        row.reserve(columns);
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t comma = line.find(',', pos);
            std::string cell = line.substr(
                pos, comma == std::string::npos ? std::string::npos : comma - pos);
            try {
                std::size_t used = 0;
                row.push_back(std::stod(cell, &used));
                if (used != cell.size())
                    throw std::invalid_argument("trailing characters");
            } catch (const std::exception&) {
                parse_fail(path, lineno, "bad numeric cell '" + cell + "'");
            }
            if (comma == std::string::npos)
                break;
            pos = comma + 1;
        }
        if (row.size() != columns)
            parse_fail(path, lineno,
                       "expected " + std::to_string(columns) + " columns, got " +
                           std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace

void write_trace_csv(const std::filesystem::path& path, const PhaseTrace& trace,
                     std::size_t stride, const Metadata& metadata) {
    trace.validate();
    if (stride == 0)
        stride = 1;
    auto out = open_out(path);
    write_metadata(out, metadata);
    out << "time_s,phase_rad\n";
    const double dt = 1.0 / trace.sample_rate_hz;
    for (std::size_t i = 0; i < trace.size(); i += stride) {
        out << fmt_g(trace.t0_s + static_cast<double>(i) * dt) << ','
            << fmt_g(trace.samples[i]) << '\n';
    }
    finish(out, path);
}

void write_pattern_csv(const std::filesystem::path& path,
                       const interference::InterferencePattern& pattern,
                       std::size_t stride, const Metadata& metadata) {
    pattern.validate();
    if (stride == 0)
        stride = 1;
    auto out = open_out(path);
    write_metadata(out, metadata);
    out << "time_s,intensity\n";
    const double dt = 1.0 / pattern.sample_rate_hz;
    for (std::size_t i = 0; i < pattern.intensity.size(); i += stride) {
        out << fmt_g(pattern.t0_s + static_cast<double>(i) * dt) << ','
            << fmt_g(pattern.intensity[i]) << '\n';
    }
    finish(out, path);
}

void write_psd_csv(const std::filesystem::path& path, const analysis::Psd& psd,
                   const Metadata& metadata) {
    psd.validate();
    auto out = open_out(path);
    write_metadata(out, metadata);
    out << "freq_hz,psd_rad2_per_hz\n";
    for (std::size_t i = 0; i < psd.freq_hz.size(); ++i)
        out << fmt_g(psd.freq_hz[i]) << ',' << fmt_g(psd.density[i]) << '\n';
    finish(out, path);
}

void write_sigma_csv(const std::filesystem::path& path,
                     const analysis::SigmaCurve& curve, const Metadata& metadata) {
    auto out = open_out(path);
    write_metadata(out, metadata);
    out << "t_a_s,sigma_rad,subsets,low_confidence\n";
    for (const auto& pt : curve.points) {
        out << fmt_g(pt.t_a_s) << ',' << fmt_g(pt.sigma_rad) << ',' << pt.subsets
            << ',' << (pt.low_confidence ? 1 : 0) << '\n';
    }
    finish(out, path);
}

void write_qber_csv(const std::filesystem::path& path,
                    const analysis::QberEstimate& estimate, const Metadata& metadata) {
    estimate.validate();
    auto out = open_out(path);
    write_metadata(out, metadata);
    out << "e,method,sigma_phi_rad,uncertainty,out_of_domain\n";
    const char* method = estimate.method == analysis::QberMethod::small_phase
                             ? "small_phase"
                             : estimate.method == analysis::QberMethod::integral
                                   ? "integral"
                                   : "counts";
    out << fmt_g(estimate.e) << ',' << method << ',' << fmt_g(estimate.sigma_phi_rad)
        << ',' << fmt_g(estimate.uncertainty) << ','
        << (estimate.out_of_domain ? 1 : 0) << '\n';
    finish(out, path);
}

void write_counts_csv(const std::filesystem::path& path,
                      const detect::CountRecord& record, const Metadata& metadata) {
    record.validate();
    auto out = open_out(path);
    write_metadata(out, metadata);
    out << "tick_150ps,time_s,detector\n";
    std::array<char, 48> buf{};
    for (std::size_t i = 0; i < record.size(); ++i) {
        auto tick =
            static_cast<long long>(std::llround(record.times_s[i] / kTickSeconds));
        std::snprintf(buf.data(), buf.size(), "%lld,%.13f,%u", tick,
                      record.times_s[i], static_cast<unsigned>(record.detector[i]));
        out << buf.data() << '\n';
    }
    finish(out, path);
}

PhaseTrace read_trace_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::size_t lineno = 0;
    expect_header(in, path, "time_s,phase_rad", lineno);
    auto rows = read_rows(in, path, 2, lineno);
    if (rows.size() < 2)
        parse_fail(path, lineno, "need at least 2 samples");

    const double dt = rows[1][0] - rows[0][0];
    if (!(dt > 0.0))
        parse_fail(path, lineno, "time column must be strictly increasing");

    PhaseTrace trace;
    trace.t0_s = rows[0][0];
    trace.sample_rate_hz = 1.0 / dt;
    trace.provenance = "csv:" + path.filename().string();
    trace.samples.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0) {
            double step = rows[i][0] - rows[i - 1][0];
            if (std::abs(step - dt) > 1e-6 * dt)
                parse_fail(path, lineno, "non-uniform sample spacing");
        }
        trace.samples.push_back(rows[i][1]);
    }
    trace.validate();
    return trace;
}

analysis::Psd read_psd_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::size_t lineno = 0;
    expect_header(in, path, "freq_hz,psd_rad2_per_hz", lineno);
    auto rows = read_rows(in, path, 2, lineno);
    if (rows.empty())
        parse_fail(path, lineno, "no spectrum rows");

    analysis::Psd psd;
    psd.freq_hz.reserve(rows.size());
    psd.density.reserve(rows.size());
    for (const auto& r : rows) {
        psd.freq_hz.push_back(r[0]);
        psd.density.push_back(r[1]);
    }
    psd.sample_rate_hz = 2.0 * psd.freq_hz.back();
    psd.validate();
    return psd;
}

analysis::SigmaCurve read_sigma_csv(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::size_t lineno = 0;
    expect_header(in, path, "t_a_s,sigma_rad,subsets,low_confidence", lineno);
    auto rows = read_rows(in, path, 4, lineno);
    if (rows.empty())
        parse_fail(path, lineno, "no stability rows");

    analysis::SigmaCurve curve;
    curve.points.reserve(rows.size());
    for (const auto& r : rows) {
        analysis::SigmaPoint pt;
        pt.t_a_s = r[0];
        pt.sigma_rad = r[1];
        pt.subsets = static_cast<std::size_t>(std::llround(r[2]));
        pt.low_confidence = r[3] != 0.0;
        curve.points.push_back(pt);
    }
    return curve;
}

std::uint64_t file_checksum(const std::filesystem::path& path) {
    auto in = open_in(path);
    std::uint64_t hash = 0xcbf29ce484222325ull; // FNV-1a 64 offset basis
    std::array<char, 65536> buf{};
    while (in) {
        in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
        auto got = static_cast<std::size_t>(in.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            hash ^= static_cast<unsigned char>(buf[i]);
            hash *= 1099511628211ull;
        }
    }
    return hash;
}

std::string checksum_hex(std::uint64_t checksum) {
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(checksum));
    return buf.data();
}

} // namespace tfsim::csvio
