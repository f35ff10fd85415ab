#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "kinuq/errors.hpp"
#include "kinuq/phase_space.hpp"
#include "kinuq/scenarios.hpp"

// Plain-text persistence: CSV field tables and sample sets, plus the small
// utilities they share. Numbers are written as the shortest decimal string
// that round-trips binary64, so fixtures are bit-stable.

namespace kinuq {

inline std::string format_double(double x) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw InvalidState("format_double: to_chars failed");
    return std::string(buf, p);
}

inline double parse_double(std::string_view s, const char* where) {
    double x = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    auto [p, ec] = std::from_chars(b, e, x);
    if (ec != std::errc() || p != e)
        throw InvalidState(std::string(where) + ": bad number '" + std::string(s) + "'");
    return x;
}

inline std::int64_t parse_int(std::string_view s, const char* where) {
    std::int64_t x = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc() || p != s.data() + s.size())
        throw InvalidState(std::string(where) + ": bad integer '" + std::string(s) + "'");
    return x;
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
    char buf[17];
    auto [p, ec] = std::to_chars(buf, buf + 16, fnv1a64(bytes), 16);
    std::string s(buf, p);
    return std::string(16 - s.size(), '0') + s;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidState("read_file: cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return std::move(ss).str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidState("write_file: cannot open " + path.string());
    out << content;
    if (!out) throw InvalidState("write_file: write failed for " + path.string());
}

inline std::vector<std::string_view> split_csv_line(std::string_view line,
                                                    std::vector<std::string_view>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

// --- Field tables: columns x, rho, u1, u2, T -------------------------------

inline std::string field_csv(const MacroField& w) {
    std::string s = "x,rho,u1,u2,T\n";
    for (int i = 0; i < w.n_x; ++i) {
        s += format_double((i + 0.5) * w.dx);
        s += ',';
        s += format_double(w.rho[i]);
        s += ',';
        s += format_double(w.u1(i));
        s += ',';
        s += format_double(w.u2(i));
        s += ',';
        s += format_double(w.temperature(i));
        s += '\n';
    }
    return s;
}

inline void write_field_csv(const std::filesystem::path& path, const MacroField& w) {
    write_file(path, field_csv(w));
}

// Primitive columns as written; no positivity validation (bi-fidelity
// reconstructions are linear combinations and may dip out of bounds).
inline Primitives read_field_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    Primitives p;
    std::vector<std::string_view> cols;
    std::size_t pos = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (header) {
            if (line != "x,rho,u1,u2,T")
                throw InvalidState("read_field_csv: unexpected header in " + path.string());
            header = false;
            continue;
        }
        split_csv_line(line, cols);
        if (cols.size() != 5)
            throw InvalidState("read_field_csv: expected 5 columns in " + path.string());
        p.rho.push_back(parse_double(cols[1], "read_field_csv"));
        p.u1.push_back(parse_double(cols[2], "read_field_csv"));
        p.u2.push_back(parse_double(cols[3], "read_field_csv"));
        p.T.push_back(parse_double(cols[4], "read_field_csv"));
    }
    return p;
}

// --- Sample sets: columns id, z1..zd ---------------------------------------

inline std::string samples_csv(std::span<const ParameterSample> samples) {
    if (samples.empty()) return "id\n";
    std::string s = "id";
    for (std::size_t k = 0; k < samples.front().z.size(); ++k)
        s += ",z" + std::to_string(k + 1);
    s += '\n';
    for (const ParameterSample& smp : samples) {
        s += std::to_string(smp.id);
        for (double zk : smp.z) {
            s += ',';
            s += format_double(zk);
        }
        s += '\n';
    }
    return s;
}

inline void write_samples_csv(const std::filesystem::path& path,
                              std::span<const ParameterSample> samples) {
    write_file(path, samples_csv(samples));
}

inline std::vector<ParameterSample> read_samples_csv(const std::filesystem::path& path) {
    const std::string text = read_file(path);
    std::vector<ParameterSample> out;
    std::vector<std::string_view> cols;
    std::size_t pos = 0, dim = 0;
    bool header = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string_view line(text.data() + pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        split_csv_line(line, cols);
        if (header) {
            if (cols.empty() || cols[0] != "id")
                throw SampleMismatch("read_samples_csv: header must start with 'id' in " +
                                     path.string());
            dim = cols.size() - 1;
            header = false;
            continue;
        }
        if (cols.size() != dim + 1)
            throw SampleMismatch("read_samples_csv: ragged row in " + path.string());
        ParameterSample s;
        s.id = static_cast<std::uint64_t>(parse_int(cols[0], "read_samples_csv"));
        s.z.reserve(dim);
        for (std::size_t k = 1; k < cols.size(); ++k)
            s.z.push_back(parse_double(cols[k], "read_samples_csv"));
        out.push_back(std::move(s));
    }
    return out;
}

}  // namespace kinuq
