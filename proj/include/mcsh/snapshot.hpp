#pragma once

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <zlib.h>

#include "mcsh/dynamics.hpp"

// Snapshot = raw little-endian float64 payload (complex fields interleaved
// re, im) + a key = value text sidecar describing it.
namespace mcsh::snapshot {

inline constexpr int schema_version = 1;

inline const char* field_list =
    "phi:complex,dt_phi:complex,N:real,dt_N:real,A1:real,A2:real,dt_A1:real,dt_A2:real,A0:real,dt_A0:real";

class SnapshotError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exact text form of a double (17 significant digits round-trips).
inline std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// "snap_<t>" with t printed to 6 decimals.
inline std::string stem_for(double t) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "snap_%.6f", t);
    return buf;
}

namespace detail {

inline void put_double(std::vector<unsigned char>& out, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) out.push_back(static_cast<unsigned char>((bits >> (8 * b)) & 0xffu));
}

inline double get_double(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
    return std::bit_cast<double>(bits);
}

inline std::uint32_t checksum(const std::vector<unsigned char>& bytes) {
    uLong crc = crc32(0L, Z_NULL, 0);
    std::size_t off = 0;
    while (off < bytes.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - off, 1u << 30));
        crc = crc32(crc, bytes.data() + off, chunk);
        off += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

inline std::map<std::string, std::string> read_sidecar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SnapshotError("cannot open snapshot header " + path.string());
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw SnapshotError("malformed header line: " + line);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    return kv;
}

}  // namespace detail

/// Serialises the payload in field_list order.
inline std::vector<unsigned char> encode(const FieldState& s) {
    std::vector<unsigned char> out;
    out.reserve(s.grid().size() * 12 * 8);
    for (const auto* f : {&s.phi, &s.dt_phi}) {
        for (Complex z : f->values()) {
            detail::put_double(out, z.real());
            detail::put_double(out, z.imag());
        }
    }
    for (const auto* f : {&s.n, &s.dt_n, &s.a[0], &s.a[1], &s.dt_a[0], &s.dt_a[1], &s.a0, &s.dt_a0}) {
        for (double v : f->values()) detail::put_double(out, v);
    }
    return out;
}

/// Writes <dir>/<stem>.bin and <dir>/<stem>.meta; returns the .bin path.
inline std::filesystem::path write(const FieldState& s, const std::filesystem::path& dir, const std::string& stem) {
    const auto bytes = encode(s);
    const auto bin = dir / (stem + ".bin");
    const auto meta = dir / (stem + ".meta");
    {
        std::ofstream out(bin, std::ios::binary);
        if (!out) throw SnapshotError("cannot write " + bin.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw SnapshotError("short write to " + bin.string());
    }
    const Grid& g = s.grid();
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", detail::checksum(bytes));
    std::ofstream m(meta);
    if (!m) throw SnapshotError("cannot write " + meta.string());
    m << "schema_version = " << schema_version << '\n'
      << "t = " << exact(s.t) << '\n'
      << "nx = " << g.nx() << '\n'
      << "ny = " << g.ny() << '\n'
      << "lx = " << exact(g.lx()) << '\n'
      << "ly = " << exact(g.ly()) << '\n'
      << "fields = " << field_list << '\n'
      << "byte_order = little\n"
      << "payload_bytes = " << bytes.size() << '\n'
      << "checksum = crc32:" << crc << '\n';
    if (!m) throw SnapshotError("short write to " + meta.string());
    return bin;
}

/// Reads a snapshot given either path (.bin or .meta) or the common stem.
inline FieldState read(std::filesystem::path path) {
    if (path.extension() == ".bin" || path.extension() == ".meta") path.replace_extension();
    const auto meta = std::filesystem::path(path.string() + ".meta");
    const auto bin = std::filesystem::path(path.string() + ".bin");
    auto kv = detail::read_sidecar(meta);
    auto need = [&](const std::string& key) {
        auto it = kv.find(key);
        if (it == kv.end()) throw SnapshotError("snapshot header missing key '" + key + "'");
        return it->second;
    };
    if (std::stoi(need("schema_version")) != schema_version) {
        throw SnapshotError("unsupported snapshot schema_version " + need("schema_version"));
    }
    if (need("byte_order") != "little") throw SnapshotError("unsupported byte_order " + need("byte_order"));
    if (need("fields") != field_list) throw SnapshotError("unexpected field list in snapshot header");

    const Grid g(std::stoi(need("nx")), std::stoi(need("ny")), std::stod(need("lx")), std::stod(need("ly")));
    std::ifstream in(bin, std::ios::binary);
    if (!in) throw SnapshotError("cannot open snapshot payload " + bin.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() != std::stoull(need("payload_bytes")) || bytes.size() != g.size() * 12 * 8) {
        throw SnapshotError("snapshot payload size mismatch in " + bin.string());
    }
    char crc[16];
    std::snprintf(crc, sizeof crc, "%08x", detail::checksum(bytes));
    if (need("checksum") != std::string("crc32:") + crc) throw SnapshotError("snapshot checksum mismatch in " + bin.string());

    FieldState s(g);
    s.t = std::stod(need("t"));
    const unsigned char* p = bytes.data();
    for (auto* f : {&s.phi, &s.dt_phi}) {
        for (Complex& z : f->values()) {
            z = Complex(detail::get_double(p), detail::get_double(p + 8));
            p += 16;
        }
    }
    for (auto* f : {&s.n, &s.dt_n, &s.a[0], &s.a[1], &s.dt_a[0], &s.dt_a[1], &s.a0, &s.dt_a0}) {
        for (double& v : f->values()) {
            v = detail::get_double(p);
            p += 8;
        }
    }
    return s;
}

}  // namespace mcsh::snapshot
