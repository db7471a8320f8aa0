#include "webuq/util.hpp"

#include "webuq/errors.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace webuq {

std::string to_hex(std::uint64_t v, int digits) {
    static const char* alphabet = "0123456789abcdef";
    std::string out(static_cast<std::size_t>(digits), '0');
    for (int i = digits - 1; i >= 0 && v != 0; --i) {
        out[static_cast<std::size_t>(i)] = alphabet[v & 0xf];
        v >>= 4;
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write file: " + path);
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
        throw Error("short write: " + path);
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    double parsed = 0.0;
    // Shortest representation that still round-trips.
    for (int prec = 1; prec <= 16; ++prec) {
        char probe[64];
        std::snprintf(probe, sizeof(probe), "%.*g", prec, v);
        std::sscanf(probe, "%lf", &parsed);
        if (parsed == v) {
            return probe;
        }
    }
    return buf;
}

} // namespace webuq
