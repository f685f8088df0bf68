#pragma once

#include <cstdint>
#include <fstream>
#include <string>

#include "wsaug/core.hpp"

namespace wsaug {

// Minimal binary PGM (P5, maxval 255) codec. Grids are float matrices with
// values in [0,1]; quantization is round(clamp(v) * 255).

inline std::uint8_t quantize_unit(float v) {
    const double c = std::clamp(static_cast<double>(v), 0.0, 1.0);
    return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

inline std::vector<std::uint8_t> grid_to_bytes(const MatrixF& grid) {
    std::vector<std::uint8_t> bytes(grid.data.size());
    for (std::size_t i = 0; i < grid.data.size(); ++i) bytes[i] = quantize_unit(grid.data[i]);
    return bytes;
}

inline void write_pgm(const std::string& path, const MatrixF& grid) {
    if (grid.rows < 1 || grid.cols < 1) throw ValidationError("empty grid");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write PGM: " + path);
    out << "P5\n" << grid.cols << ' ' << grid.rows << "\n255\n";
    const std::vector<std::uint8_t> bytes = grid_to_bytes(grid);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing PGM: " + path);
}

namespace detail {

inline int pgm_token(std::istream& in, const std::string& path) {
    // Skips whitespace and '#' comment lines, then reads one decimal token.
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw ParseError("malformed PGM header: " + path, 0);
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > 1'000'000) throw ParseError("PGM header value out of range: " + path, 0);
        c = in.get();
    }
    if (c != EOF) in.unget();
    return static_cast<int>(v);
}

} // namespace detail

/// Reads a binary PGM into a grid of [0,1] values (byte / 255). Requires
/// magic P5 and maxval 255.
inline MatrixF read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open PGM: " + path);
    char magic[2] = {0, 0};
    in.read(magic, 2);
    if (!in || magic[0] != 'P' || magic[1] != '5')
        throw ParseError("not a binary PGM (magic P5): " + path, 0);
    const int w = detail::pgm_token(in, path);
    const int h = detail::pgm_token(in, path);
    const int maxval = detail::pgm_token(in, path);
    if (maxval != 255) throw ParseError("unsupported PGM maxval (need 255): " + path, 0);
    in.get(); // single whitespace after maxval
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw ParseError("PGM payload truncated: " + path, 0);
    MatrixF grid(h, w);
    for (std::size_t i = 0; i < bytes.size(); ++i)
        grid.data[i] = static_cast<float>(bytes[i]) / 255.0f;
    return grid;
}

} // namespace wsaug
