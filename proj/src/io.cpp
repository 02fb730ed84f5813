#include "fann/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

static_assert(std::numeric_limits<float>::is_iec559, "binary format requires IEEE-754 floats");

namespace fann {

namespace {

constexpr char kMagic[4] = {'F', 'A', 'N', 'N'};

void put_u32le(std::ostream& out, uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw IoError(IoError::Kind::short_file, "dataset file truncated in header");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

Dataset load_text(std::istream& in) {
    std::string line;
    if (!std::getline(in, line))
        throw IoError(IoError::Kind::malformed_header, "missing header line");
    uint64_t n = 0, d = 0;
    char extra;
    std::istringstream head(line);
    if (!(head >> n >> d) || (head >> extra))
        throw IoError(IoError::Kind::malformed_header, "header must be 'n d'");
    if (d == 0) throw IoError(IoError::Kind::malformed_header, "dimension must be at least 1");
    std::vector<float> flat;
    flat.reserve(n * d);
    for (uint64_t i = 0; i < n; ++i) {
        if (!std::getline(in, line))
            throw IoError(IoError::Kind::short_file, "fewer point lines than header declares");
        std::istringstream row(line);
        for (uint64_t j = 0; j < d; ++j) {
            float v;
            if (!(row >> v))
                throw IoError(IoError::Kind::dimension_mismatch,
                              "row " + std::to_string(i) + " has fewer than d values");
            flat.push_back(v);
        }
        float trailing;
        if (row >> trailing)
            throw IoError(IoError::Kind::dimension_mismatch,
                          "row " + std::to_string(i) + " has more than d values");
    }
    return Dataset(d, std::move(flat));
}

Dataset load_binary(std::istream& in) {
    char magic[4];
    in.read(magic, 4);
    if (!in) throw IoError(IoError::Kind::short_file, "dataset file shorter than magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw IoError(IoError::Kind::bad_magic, "bad magic bytes, expected FANN");
    const uint32_t n = get_u32le(in);
    const uint32_t d = get_u32le(in);
    if (d == 0) throw IoError(IoError::Kind::malformed_header, "dimension must be at least 1");
    std::vector<float> flat(static_cast<size_t>(n) * d);
    std::vector<unsigned char> buf(flat.size() * 4);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (static_cast<size_t>(in.gcount()) != buf.size())
        throw IoError(IoError::Kind::short_file, "payload truncated");
    for (size_t i = 0; i < flat.size(); ++i) {
        const uint32_t bits = static_cast<uint32_t>(buf[i * 4]) |
                              (static_cast<uint32_t>(buf[i * 4 + 1]) << 8) |
                              (static_cast<uint32_t>(buf[i * 4 + 2]) << 16) |
                              (static_cast<uint32_t>(buf[i * 4 + 3]) << 24);
        std::memcpy(&flat[i], &bits, 4);
    }
    return Dataset(d, std::move(flat));
}

}  // namespace

Dataset load_dataset(const std::string& path, FileFormat format) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(IoError::Kind::io_failure, "cannot open " + path);
    return format == FileFormat::text ? load_text(in) : load_binary(in);
}

void save_dataset(const Dataset& data, const std::string& path, FileFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(IoError::Kind::io_failure, "cannot open " + path + " for writing");
    const auto n = static_cast<uint32_t>(data.size());
    const auto d = static_cast<uint32_t>(data.dim());
    if (format == FileFormat::text) {
        out << n << ' ' << d << '\n';
        char buf[64];
        for (uint32_t i = 0; i < n; ++i) {
            const auto p = data[i];
            for (uint32_t j = 0; j < d; ++j) {
                std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(p[j]));
                out << (j ? " " : "") << buf;
            }
            out << '\n';
        }
    } else {
        out.write(kMagic, 4);
        put_u32le(out, n);
        put_u32le(out, d);
        for (float v : data.raw()) {
            uint32_t bits;
            std::memcpy(&bits, &v, 4);
            put_u32le(out, bits);
        }
    }
    if (!out) throw IoError(IoError::Kind::io_failure, "write to " + path + " failed");
}

FileFormat parse_format(const std::string& name) {
    if (name == "text") return FileFormat::text;
    if (name == "binary") return FileFormat::binary;
    throw std::invalid_argument("unknown format '" + name + "', expected text or binary");
}

}  // namespace fann
