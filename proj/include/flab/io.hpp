#pragma once

// Deterministic report output: CSV (RFC 4180, LF line ends, '.' decimal,
// shortest round-trip doubles) and the raw path dump format.

#include "flab/common.hpp"
#include "flab/diffusion.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace flab {

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw FlabError("cannot open " + path);
    }

    void raw_row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << quote(cells[i]);
        }
        out_ << '\n';  // binary stream: always LF
    }

    void header(const std::vector<std::string>& names) { raw_row(names); }

    void row(const std::vector<double>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (double v : values) cells.push_back(format_double(v));
        raw_row(cells);
    }

private:
    static std::string quote(const std::string& s) {
        if (s.find_first_of(",\"\n") == std::string::npos) return s;
        std::string q = "\"";
        for (char c : s) {
            if (c == '"') q += '"';
            q += c;
        }
        return q + '"';
    }
    std::ofstream out_;
};

// path dump: 32-byte header (magic "FLAB", u32 version, u64 n_paths,
// u64 snapshots per path, u32 dim, u32 zero), then little-endian float64
// states in [path][snapshot][dim] order
inline void dump_paths(const PathEnsemble& e, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FlabError("cannot open " + path);
    char header[32] = {0};
    std::memcpy(header, "FLAB", 4);
    std::uint32_t version = 1;
    std::uint64_t n_paths = e.n_paths;
    std::uint64_t snapshots = static_cast<std::uint64_t>(e.n_steps + 1);
    std::uint32_t dim = static_cast<std::uint32_t>(e.dim);
    std::memcpy(header + 4, &version, 4);
    std::memcpy(header + 8, &n_paths, 8);
    std::memcpy(header + 16, &snapshots, 8);
    std::memcpy(header + 24, &dim, 4);
    out.write(header, sizeof header);
    out.write(reinterpret_cast<const char*>(e.states.data()),
              static_cast<std::streamsize>(e.states.size() * sizeof(double)));
    if (!out) throw FlabError("short write to " + path);
}

struct PathDumpHeader {
    std::uint32_t version = 0;
    std::uint64_t n_paths = 0;
    std::uint64_t snapshots = 0;
    std::uint32_t dim = 0;
};

inline PathDumpHeader read_path_dump_header(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FlabError("cannot open " + path);
    char header[32];
    in.read(header, sizeof header);
    if (!in || std::memcmp(header, "FLAB", 4) != 0)
        throw FlabError("bad path dump header in " + path);
    PathDumpHeader h;
    std::memcpy(&h.version, header + 4, 4);
    std::memcpy(&h.n_paths, header + 8, 8);
    std::memcpy(&h.snapshots, header + 16, 8);
    std::memcpy(&h.dim, header + 24, 4);
    return h;
}

}  // namespace flab
