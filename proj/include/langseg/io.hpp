#pragma once

/**
 * @file io.hpp
 * @brief Binary PGM (P5) images/masks, FMAP probability maps, program
 *        files and base64.
 *
 * FMAP layout: ASCII header "FMAP\n<width> <height> <channels>\n" followed
 * by little-endian float32 values, planar (channel-major), row-major inside
 * each channel.
 */

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "langseg/command.hpp"
#include "langseg/error.hpp"
#include "langseg/grid.hpp"

namespace langseg::io {

inline std::string readFile(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open '" + path.string() + "'");
    return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void writeFile(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write '" + path.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write to '" + path.string() + "'");
}

namespace detail {

/// Reads ASCII header tokens separated by whitespace, skipping '#' comments.
class HeaderReader {
public:
    explicit HeaderReader(std::string_view bytes) : b_(bytes) {}

    std::string token() {
        skip();
        std::size_t start = pos_;
        while (pos_ < b_.size() && !std::isspace(static_cast<unsigned char>(b_[pos_]))) ++pos_;
        if (start == pos_) throw FormatError("truncated header", pos_);
        return std::string(b_.substr(start, pos_ - start));
    }
    long long integer(const char* what) {
        std::size_t at = pos_;
        std::string t = token();
        long long v = 0;
        auto res = std::from_chars(t.data(), t.data() + t.size(), v);
        if (res.ec != std::errc{} || res.ptr != t.data() + t.size() || v < 0)
            throw FormatError(std::string("invalid ") + what + " '" + t + "'", at);
        return v;
    }
    /// Consumes the single whitespace byte that ends the header.
    std::size_t endHeader() {
        if (pos_ >= b_.size() || !std::isspace(static_cast<unsigned char>(b_[pos_])))
            throw FormatError("missing header terminator", pos_);
        return ++pos_;
    }
    std::size_t pos() const noexcept { return pos_; }

private:
    void skip() {
        while (pos_ < b_.size()) {
            if (std::isspace(static_cast<unsigned char>(b_[pos_]))) {
                ++pos_;
            } else if (b_[pos_] == '#') {
                while (pos_ < b_.size() && b_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }
    std::string_view b_;
    std::size_t pos_ = 0;
};

} // namespace detail

/// 8-bit raster as stored in a P5 file.
struct Pgm {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;
};

inline Pgm decodePgm(std::string_view bytes) {
    if (bytes.size() < 2 || bytes.substr(0, 2) != "P5") throw FormatError("not a binary PGM (bad magic)", 0);
    detail::HeaderReader h(bytes.substr(2));
    long long w = h.integer("width"), hgt = h.integer("height"), maxval = h.integer("maxval");
    if (w < 1 || hgt < 1 || w > 65535 || hgt > 65535) throw FormatError("PGM dimensions out of range", 2);
    if (maxval < 1 || maxval > 255) throw FormatError("only 8-bit PGM (maxval <= 255) is supported", 2);
    std::size_t data = 2 + h.endHeader();
    std::size_t need = static_cast<std::size_t>(w * hgt);
    if (bytes.size() - data < need)
        throw FormatError("truncated PGM payload: expected " + std::to_string(need) + " bytes, got " +
                              std::to_string(bytes.size() - data),
                          bytes.size());
    Pgm p{static_cast<int>(w), static_cast<int>(hgt), {}};
    p.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(data),
                    bytes.begin() + static_cast<std::ptrdiff_t>(data + need));
    return p;
}

inline std::string encodePgm(int width, int height, const std::vector<std::uint8_t>& pixels) {
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
    return out;
}

inline std::string encodeImage(const GridImage& img) {
    std::vector<std::uint8_t> px(img.size());
    for (std::size_t i = 0; i < img.size(); ++i)
        px[i] = static_cast<std::uint8_t>(std::lround(std::clamp(img[i], 0.0, 1.0) * 255.0));
    return encodePgm(img.width(), img.height(), px);
}

inline GridImage decodeImage(std::string_view bytes) {
    Pgm p = decodePgm(bytes);
    GridImage img(p.width, p.height, 0.0);
    for (std::size_t i = 0; i < img.size(); ++i) img[i] = p.pixels[i] / 255.0;
    return img;
}

/// Masks store label ids directly (0/1 for binary masks).
inline std::string encodeMask(const Grid<std::uint8_t>& m) {
    return encodePgm(m.width(), m.height(), std::vector<std::uint8_t>(m.values().begin(), m.values().end()));
}

inline LabelMask decodeLabels(std::string_view bytes, int classCount = 0) {
    Pgm p = decodePgm(bytes);
    int maxLabel = 0;
    for (auto v : p.pixels) maxLabel = std::max<int>(maxLabel, v);
    int c = classCount > 0 ? classCount : std::max(2, maxLabel + 1);
    if (maxLabel >= c) throw FormatError("label id " + std::to_string(maxLabel) + " >= class count " + std::to_string(c));
    LabelMask m(p.width, p.height, c);
    std::copy(p.pixels.begin(), p.pixels.end(), m.values().begin());
    return m;
}

/// Any nonzero byte is foreground.
inline BinaryMask decodeBinary(std::string_view bytes) {
    Pgm p = decodePgm(bytes);
    BinaryMask m(p.width, p.height);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = p.pixels[i] ? 1 : 0;
    return m;
}

inline GridImage readImage(const std::filesystem::path& path) { return decodeImage(readFile(path)); }
inline void writeImage(const std::filesystem::path& path, const GridImage& img) { writeFile(path, encodeImage(img)); }
inline LabelMask readLabels(const std::filesystem::path& path, int classCount = 0) {
    return decodeLabels(readFile(path), classCount);
}
inline void writeMask(const std::filesystem::path& path, const Grid<std::uint8_t>& m) { writeFile(path, encodeMask(m)); }

// ---------------------------------------------------------------------------
// FMAP

namespace detail {

inline void putF32(std::string& out, float v) {
    auto bits = std::bit_cast<std::uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

inline float getF32(std::string_view b, std::size_t at) {
    std::uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[at + i])) << (8 * i);
    return std::bit_cast<float>(bits);
}

} // namespace detail

/// Planar float32 channels.
struct Fmap {
    int width = 0;
    int height = 0;
    int channels = 0;
    std::vector<float> values;  // channel-major
};

inline std::string encodeFmap(const Fmap& f) {
    if (f.values.size() != static_cast<std::size_t>(f.width) * f.height * f.channels)
        throw DimensionError("FMAP payload does not match its header");
    std::string out = "FMAP\n" + std::to_string(f.width) + " " + std::to_string(f.height) + " " +
                      std::to_string(f.channels) + "\n";
    for (float v : f.values) detail::putF32(out, v);
    return out;
}

inline Fmap decodeFmap(std::string_view bytes) {
    if (bytes.size() < 5 || bytes.substr(0, 5) != "FMAP\n") throw FormatError("not an FMAP file (bad magic)", 0);
    std::size_t eol = bytes.find('\n', 5);
    if (eol == std::string_view::npos) throw FormatError("truncated FMAP header", bytes.size());
    detail::HeaderReader h(bytes.substr(5, eol - 5 + 1));
    long long w = h.integer("width"), hgt = h.integer("height"), c = h.integer("channels");
    if (w < 1 || hgt < 1 || c < 1) throw FormatError("FMAP dimensions must be positive", 5);
    std::size_t data = eol + 1;
    std::size_t count = static_cast<std::size_t>(w * hgt * c);
    std::size_t need = count * 4;
    if (bytes.size() - data != need)
        throw FormatError("FMAP payload length " + std::to_string(bytes.size() - data) + " does not match header (" +
                              std::to_string(need) + " bytes)",
                          bytes.size() < data + need ? bytes.size() : data + need);
    Fmap f{static_cast<int>(w), static_cast<int>(hgt), static_cast<int>(c), std::vector<float>(count)};
    for (std::size_t i = 0; i < count; ++i) f.values[i] = detail::getF32(bytes, data + 4 * i);
    return f;
}

inline Fmap toFmap(const ProbMap& p) {
    Fmap f{p.width(), p.height(), p.classCount(),
           std::vector<float>(static_cast<std::size_t>(p.width()) * p.height() * p.classCount())};
    const std::size_t plane = static_cast<std::size_t>(p.width()) * p.height();
    for (int c = 0; c < p.classCount(); ++c)
        for (int y = 0; y < p.height(); ++y)
            for (int x = 0; x < p.width(); ++x)
                f.values[c * plane + static_cast<std::size_t>(y) * p.width() + x] = static_cast<float>(p.at(x, y, c));
    return f;
}

/// Renormalizes each pixel after the float32 round trip.
inline ProbMap toProbMap(const Fmap& f) {
    if (f.channels < 2) throw FormatError("probability map needs at least two channels");
    ProbMap p(f.width, f.height, f.channels);
    const std::size_t plane = static_cast<std::size_t>(f.width) * f.height;
    for (int y = 0; y < f.height; ++y)
        for (int x = 0; x < f.width; ++x) {
            double s = 0.0;
            for (int c = 0; c < f.channels; ++c) {
                double v = f.values[c * plane + static_cast<std::size_t>(y) * f.width + x];
                if (!(v >= 0.0)) throw FormatError("negative or NaN probability in FMAP");
                p.at(x, y, c) = v;
                s += v;
            }
            if (!(s > 0.0)) throw FormatError("all-zero probability vector in FMAP");
            for (int c = 0; c < f.channels; ++c) p.at(x, y, c) /= s;
        }
    return p;
}

// ---------------------------------------------------------------------------
// Programs

inline Program readProgram(const std::filesystem::path& path) { return parseProgram(readFile(path)); }
inline void writeProgram(const std::filesystem::path& path, const Program& p) { writeFile(path, renderProgram(p)); }

// ---------------------------------------------------------------------------
// base64 (RFC 4648, with padding)

inline std::string base64Encode(std::string_view in) {
    static constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < in.size(); i += 3) {
        std::uint32_t v = (static_cast<unsigned char>(in[i]) << 16) | (static_cast<unsigned char>(in[i + 1]) << 8) |
                          static_cast<unsigned char>(in[i + 2]);
        for (int k = 3; k >= 0; --k) out.push_back(kAlphabet[(v >> (6 * k)) & 63]);
    }
    if (i < in.size()) {
        std::uint32_t v = static_cast<unsigned char>(in[i]) << 16;
        if (i + 1 < in.size()) v |= static_cast<unsigned char>(in[i + 1]) << 8;
        out.push_back(kAlphabet[(v >> 18) & 63]);
        out.push_back(kAlphabet[(v >> 12) & 63]);
        out.push_back(i + 1 < in.size() ? kAlphabet[(v >> 6) & 63] : '=');
        out.push_back('=');
    }
    return out;
}

inline std::string base64Decode(std::string_view in) {
    auto val = [](char c) -> int {
        if (c >= 'A' && c <= 'Z') return c - 'A';
        if (c >= 'a' && c <= 'z') return c - 'a' + 26;
        if (c >= '0' && c <= '9') return c - '0' + 52;
        if (c == '+') return 62;
        if (c == '/') return 63;
        return -1;
    };
    if (in.size() % 4 != 0) throw FormatError("base64 length is not a multiple of 4", in.size());
    std::string out;
    for (std::size_t i = 0; i < in.size(); i += 4) {
        std::uint32_t v = 0;
        int pad = 0;
        for (int k = 0; k < 4; ++k) {
            char c = in[i + static_cast<std::size_t>(k)];
            if (c == '=' && i + 4 == in.size() && k >= 2) {
                ++pad;
                v <<= 6;
                continue;
            }
            int d = val(c);
            if (d < 0 || pad) throw FormatError("invalid base64 character", i + static_cast<std::size_t>(k));
            v = (v << 6) | static_cast<std::uint32_t>(d);
        }
        out.push_back(static_cast<char>((v >> 16) & 0xff));
        if (pad < 2) out.push_back(static_cast<char>((v >> 8) & 0xff));
        if (pad < 1) out.push_back(static_cast<char>(v & 0xff));
    }
    return out;
}

} // namespace langseg::io
