#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace floweval::npy {

/// One array in NPY v1.0 layout. `raw` holds the little-endian payload.
struct NpyArray {
    std::string dtype; ///< "<f4", "<f8", "|u1", "<i4" or "<i8"
    std::vector<std::size_t> shape;
    std::vector<char> raw;

    std::size_t elem_size() const;
    std::size_t elem_count() const;
    std::vector<double> as_doubles() const;

    static NpyArray from_floats(std::span<const float> data,
                                std::vector<std::size_t> shape);
    static NpyArray from_doubles(std::span<const double> data,
                                 std::vector<std::size_t> shape);
    static NpyArray from_bytes(std::span<const std::uint8_t> data,
                               std::vector<std::size_t> shape);
};

/// Strict NPY v1.0 decode: magic \x93NUMPY, version 1.0, 2-byte header length,
/// textual header dict. fortran_order must be False.
NpyArray decode_npy(std::span<const char> bytes, const std::string& name = "");

/// NPY v1.0 encode with the 16-byte-aligned padded header numpy writes.
std::vector<char> encode_npy(const NpyArray& array);

struct ZipEntry {
    std::string name;
    std::vector<char> data;
};

/// Minimal classic-zip reader: STORED and DEFLATE entries, central-directory
/// driven. Zip64 archives are rejected with ParseError.
std::vector<ZipEntry> read_zip(const std::filesystem::path& path);

/// Deterministic zip writer: STORED entries, zeroed timestamps.
void write_zip(const std::filesystem::path& path, std::span<const ZipEntry> entries);

/// NPZ = zip of <name>.npy members.
std::map<std::string, NpyArray> read_npz(const std::filesystem::path& path);
void write_npz(const std::filesystem::path& path,
               const std::map<std::string, NpyArray>& arrays);

} // namespace floweval::npy
