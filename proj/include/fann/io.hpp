#pragma once

#include <string>

#include "fann/core.hpp"

namespace fann {

enum class FileFormat { text, binary };

/// Dataset file errors, with the failure class preserved for callers that
/// want to distinguish a truncated payload from a bad header.
struct IoError : std::runtime_error {
    enum class Kind { malformed_header, short_file, dimension_mismatch, bad_magic, io_failure };
    Kind kind;
    IoError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
};

/// Text: first line "n d", then n lines of d space-separated reals.
/// Binary: magic "FANN", n and d as 32-bit little-endian unsigned, then
/// n*d little-endian IEEE-754 binary32 values row-major. Binary round-trips
/// bit-exactly through save_dataset.
Dataset load_dataset(const std::string& path, FileFormat format);
void save_dataset(const Dataset& data, const std::string& path, FileFormat format);

FileFormat parse_format(const std::string& name);

}  // namespace fann
