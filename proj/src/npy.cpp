#include "floweval/npy.hpp"

#include "floweval/errors.hpp"

#include <zlib.h>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <regex>

namespace floweval::npy {

namespace {

void check_little_endian() {
    const std::uint16_t probe = 1;
    char low;
    std::memcpy(&low, &probe, 1);
    if (low != 1) raise(ErrorCode::ParseError, "big-endian hosts are not supported");
}

std::uint16_t read_u16(const char* p) {
    std::uint16_t v;
    std::memcpy(&v, p, 2);
    return v;
}

std::uint32_t read_u32(const char* p) {
    std::uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

void push_u16(std::vector<char>& out, std::uint16_t v) {
    out.insert(out.end(), reinterpret_cast<const char*>(&v),
               reinterpret_cast<const char*>(&v) + 2);
}

void push_u32(std::vector<char>& out, std::uint32_t v) {
    out.insert(out.end(), reinterpret_cast<const char*>(&v),
               reinterpret_cast<const char*>(&v) + 4);
}

std::size_t dtype_size(const std::string& dtype, const std::string& name) {
    if (dtype.size() < 3) raise(ErrorCode::ParseError, "bad dtype '" + dtype + "' in " + name);
    std::size_t width = 0;
    for (std::size_t i = 2; i < dtype.size(); ++i) {
        if (dtype[i] < '0' || dtype[i] > '9')
            raise(ErrorCode::ParseError, "bad dtype '" + dtype + "' in " + name);
        width = width * 10 + (dtype[i] - '0');
    }
    if (width == 0) raise(ErrorCode::ParseError, "bad dtype '" + dtype + "' in " + name);
    return width;
}

} // namespace

std::size_t NpyArray::elem_size() const { return dtype_size(dtype, "array"); }

std::size_t NpyArray::elem_count() const {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    return n;
}

std::vector<double> NpyArray::as_doubles() const {
    check_little_endian();
    const std::size_t n = elem_count();
    std::vector<double> out(n);
    if (dtype == "<f4") {
        for (std::size_t k = 0; k < n; ++k) {
            float v;
            std::memcpy(&v, raw.data() + 4 * k, 4);
            out[k] = v;
        }
    } else if (dtype == "<f8") {
        std::memcpy(out.data(), raw.data(), 8 * n);
    } else if (dtype == "|u1" || dtype == "<u1" || dtype == "|b1") {
        for (std::size_t k = 0; k < n; ++k)
            out[k] = static_cast<unsigned char>(raw[k]);
    } else if (dtype == "<i4") {
        for (std::size_t k = 0; k < n; ++k) {
            std::int32_t v;
            std::memcpy(&v, raw.data() + 4 * k, 4);
            out[k] = v;
        }
    } else if (dtype == "<i8") {
        for (std::size_t k = 0; k < n; ++k) {
            std::int64_t v;
            std::memcpy(&v, raw.data() + 8 * k, 8);
            out[k] = static_cast<double>(v);
        }
    } else {
        raise(ErrorCode::ParseError, "unsupported dtype '" + dtype + "'");
    }
    return out;
}

NpyArray NpyArray::from_floats(std::span<const float> data,
                               std::vector<std::size_t> shape) {
    check_little_endian();
    NpyArray a;
    a.dtype = "<f4";
    a.shape = std::move(shape);
    a.raw.resize(data.size() * 4);
    std::memcpy(a.raw.data(), data.data(), a.raw.size());
    return a;
}

NpyArray NpyArray::from_doubles(std::span<const double> data,
                                std::vector<std::size_t> shape) {
    check_little_endian();
    NpyArray a;
    a.dtype = "<f8";
    a.shape = std::move(shape);
    a.raw.resize(data.size() * 8);
    std::memcpy(a.raw.data(), data.data(), a.raw.size());
    return a;
}

NpyArray NpyArray::from_bytes(std::span<const std::uint8_t> data,
                              std::vector<std::size_t> shape) {
    NpyArray a;
    a.dtype = "|u1";
    a.shape = std::move(shape);
    a.raw.assign(reinterpret_cast<const char*>(data.data()),
                 reinterpret_cast<const char*>(data.data()) + data.size());
    return a;
}

NpyArray decode_npy(std::span<const char> bytes, const std::string& name) {
    const std::string where = name.empty() ? "npy data" : name;
    if (bytes.size() < 10 || std::memcmp(bytes.data(), "\x93NUMPY", 6) != 0)
        raise(ErrorCode::ParseError, "missing NPY magic in " + where);
    const unsigned char major = bytes[6], minor = bytes[7];
    if (major != 1 || minor != 0)
        raise(ErrorCode::ParseError, "unsupported NPY version " + std::to_string(major) +
                                         "." + std::to_string(minor) + " in " + where);
    const std::uint16_t header_len = read_u16(bytes.data() + 8);
    if (bytes.size() < 10u + header_len)
        raise(ErrorCode::ParseError, "truncated NPY header in " + where);
    const std::string header(bytes.data() + 10, header_len);

    const std::regex descr_re(R"('descr'\s*:\s*'([^']+)')");
    const std::regex order_re(R"('fortran_order'\s*:\s*(True|False))");
    const std::regex shape_re(R"('shape'\s*:\s*\(([^)]*)\))");
    std::smatch m;
    NpyArray a;
    if (!std::regex_search(header, m, descr_re))
        raise(ErrorCode::ParseError, "NPY header lacks descr in " + where);
    a.dtype = m[1];
    if (!std::regex_search(header, m, order_re))
        raise(ErrorCode::ParseError, "NPY header lacks fortran_order in " + where);
    if (m[1] == "True")
        raise(ErrorCode::ParseError, "fortran_order arrays are not supported in " + where);
    if (!std::regex_search(header, m, shape_re))
        raise(ErrorCode::ParseError, "NPY header lacks shape in " + where);
    const std::string dims = m[1];
    const std::regex num_re("[0-9]+");
    for (auto it = std::sregex_iterator(dims.begin(), dims.end(), num_re);
         it != std::sregex_iterator(); ++it)
        a.shape.push_back(std::stoull(it->str()));

    const std::size_t payload = a.elem_count() * dtype_size(a.dtype, where);
    if (bytes.size() < 10u + header_len + payload)
        raise(ErrorCode::ParseError, "truncated NPY payload in " + where);
    a.raw.assign(bytes.data() + 10 + header_len,
                 bytes.data() + 10 + header_len + payload);
    return a;
}

std::vector<char> encode_npy(const NpyArray& array) {
    std::string dict = "{'descr': '" + array.dtype + "', 'fortran_order': False, 'shape': (";
    for (std::size_t k = 0; k < array.shape.size(); ++k) {
        dict += std::to_string(array.shape[k]);
        if (k + 1 < array.shape.size()) dict += ", ";
    }
    if (array.shape.size() == 1) dict += ",";
    dict += "), }";
    // numpy aligns the payload to 64 bytes: pad the dict with spaces so the
    // 10-byte preamble plus dict is a multiple of 64, ending in \n
    const std::size_t pad = 64 - (10 + dict.size() + 1) % 64;
    dict.append(pad == 64 ? 0 : pad, ' ');
    dict += '\n';

    std::vector<char> out;
    out.reserve(10 + dict.size() + array.raw.size());
    out.insert(out.end(), {'\x93', 'N', 'U', 'M', 'P', 'Y', '\x01', '\x00'});
    push_u16(out, static_cast<std::uint16_t>(dict.size()));
    out.insert(out.end(), dict.begin(), dict.end());
    out.insert(out.end(), array.raw.begin(), array.raw.end());
    return out;
}

namespace {

constexpr std::uint32_t kLocalSig = 0x04034b50;
constexpr std::uint32_t kCentralSig = 0x02014b50;
constexpr std::uint32_t kEocdSig = 0x06054b50;

std::vector<char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorCode::IoError, "cannot open " + path.string());
    std::vector<char> data((std::istreambuf_iterator<char>(in)),
                           std::istreambuf_iterator<char>());
    return data;
}

std::vector<char> inflate_raw(std::span<const char> comp, std::size_t expected,
                              const std::string& name) {
    std::vector<char> out(expected);
    z_stream strm{};
    if (inflateInit2(&strm, -MAX_WBITS) != Z_OK)
        raise(ErrorCode::ParseError, "inflate init failed for " + name);
    strm.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(comp.data()));
    strm.avail_in = static_cast<uInt>(comp.size());
    strm.next_out = reinterpret_cast<Bytef*>(out.data());
    strm.avail_out = static_cast<uInt>(out.size());
    const int rc = inflate(&strm, Z_FINISH);
    inflateEnd(&strm);
    if (rc != Z_STREAM_END || strm.total_out != expected)
        raise(ErrorCode::ParseError, "corrupt deflate stream in zip entry " + name);
    return out;
}

} // namespace

std::vector<ZipEntry> read_zip(const std::filesystem::path& path) {
    const std::vector<char> data = read_file(path);
    if (data.size() < 22) raise(ErrorCode::ParseError, "not a zip file: " + path.string());

    // end-of-central-directory: scan backwards over a possible comment
    std::size_t eocd = std::string::npos;
    const std::size_t lo = data.size() > 22 + 65535 ? data.size() - 22 - 65535 : 0;
    for (std::size_t k = data.size() - 22 + 1; k-- > lo;) {
        if (read_u32(data.data() + k) == kEocdSig) {
            eocd = k;
            break;
        }
    }
    if (eocd == std::string::npos)
        raise(ErrorCode::ParseError, "zip end-of-central-directory not found in " +
                                         path.string());
    const std::uint16_t n_entries = read_u16(data.data() + eocd + 10);
    const std::uint32_t cd_offset = read_u32(data.data() + eocd + 16);
    if (n_entries == 0xFFFF || cd_offset == 0xFFFFFFFF)
        raise(ErrorCode::ParseError, "zip64 archives are not supported: " + path.string());

    std::vector<ZipEntry> entries;
    std::size_t pos = cd_offset;
    for (std::uint16_t e = 0; e < n_entries; ++e) {
        if (pos + 46 > data.size() || read_u32(data.data() + pos) != kCentralSig)
            raise(ErrorCode::ParseError, "corrupt zip central directory in " +
                                             path.string());
        const std::uint16_t method = read_u16(data.data() + pos + 10);
        const std::uint32_t crc = read_u32(data.data() + pos + 16);
        const std::uint32_t comp_size = read_u32(data.data() + pos + 20);
        const std::uint32_t uncomp_size = read_u32(data.data() + pos + 24);
        const std::uint16_t name_len = read_u16(data.data() + pos + 28);
        const std::uint16_t extra_len = read_u16(data.data() + pos + 30);
        const std::uint16_t comment_len = read_u16(data.data() + pos + 32);
        const std::uint32_t local_off = read_u32(data.data() + pos + 42);
        if (comp_size == 0xFFFFFFFF || local_off == 0xFFFFFFFF)
            raise(ErrorCode::ParseError, "zip64 entry is not supported in " +
                                             path.string());
        const std::string name(data.data() + pos + 46, name_len);
        pos += 46u + name_len + extra_len + comment_len;

        if (local_off + 30ull > data.size() ||
            read_u32(data.data() + local_off) != kLocalSig)
            raise(ErrorCode::ParseError, "corrupt local header for zip entry " + name);
        const std::uint16_t l_name = read_u16(data.data() + local_off + 26);
        const std::uint16_t l_extra = read_u16(data.data() + local_off + 28);
        const std::size_t payload = local_off + 30ull + l_name + l_extra;
        if (payload + comp_size > data.size())
            raise(ErrorCode::ParseError, "truncated zip entry " + name);

        std::vector<char> bytes;
        if (method == 0) {
            bytes.assign(data.data() + payload, data.data() + payload + comp_size);
        } else if (method == 8) {
            bytes = inflate_raw({data.data() + payload, comp_size}, uncomp_size, name);
        } else {
            raise(ErrorCode::ParseError, "unsupported compression method " +
                                             std::to_string(method) + " for zip entry " +
                                             name);
        }
        const auto actual_crc = crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
                                      static_cast<uInt>(bytes.size()));
        if (actual_crc != crc)
            raise(ErrorCode::ParseError, "CRC mismatch in zip entry " + name);
        entries.push_back(ZipEntry{name, std::move(bytes)});
    }
    return entries;
}

void write_zip(const std::filesystem::path& path, std::span<const ZipEntry> entries) {
    std::vector<char> out;
    struct Central {
        std::string name;
        std::uint32_t crc, size, offset;
    };
    std::vector<Central> centrals;
    for (const ZipEntry& e : entries) {
        const auto crc = static_cast<std::uint32_t>(
            crc32(0L, reinterpret_cast<const Bytef*>(e.data.data()),
                  static_cast<uInt>(e.data.size())));
        const auto offset = static_cast<std::uint32_t>(out.size());
        push_u32(out, kLocalSig);
        push_u16(out, 20); // version needed
        push_u16(out, 0);  // flags
        push_u16(out, 0);  // method: stored
        push_u16(out, 0);  // time (fixed for determinism)
        push_u16(out, 0);  // date
        push_u32(out, crc);
        push_u32(out, static_cast<std::uint32_t>(e.data.size()));
        push_u32(out, static_cast<std::uint32_t>(e.data.size()));
        push_u16(out, static_cast<std::uint16_t>(e.name.size()));
        push_u16(out, 0); // extra
        out.insert(out.end(), e.name.begin(), e.name.end());
        out.insert(out.end(), e.data.begin(), e.data.end());
        centrals.push_back({e.name, crc, static_cast<std::uint32_t>(e.data.size()), offset});
    }
    const auto cd_offset = static_cast<std::uint32_t>(out.size());
    for (const Central& c : centrals) {
        push_u32(out, kCentralSig);
        push_u16(out, 20); // version made by
        push_u16(out, 20); // version needed
        push_u16(out, 0);
        push_u16(out, 0);
        push_u16(out, 0);
        push_u16(out, 0);
        push_u32(out, c.crc);
        push_u32(out, c.size);
        push_u32(out, c.size);
        push_u16(out, static_cast<std::uint16_t>(c.name.size()));
        push_u16(out, 0);
        push_u16(out, 0);
        push_u16(out, 0);
        push_u16(out, 0);
        push_u32(out, 0);
        push_u32(out, c.offset);
        out.insert(out.end(), c.name.begin(), c.name.end());
    }
    const auto cd_size = static_cast<std::uint32_t>(out.size()) - cd_offset;
    push_u32(out, kEocdSig);
    push_u16(out, 0);
    push_u16(out, 0);
    push_u16(out, static_cast<std::uint16_t>(centrals.size()));
    push_u16(out, static_cast<std::uint16_t>(centrals.size()));
    push_u32(out, cd_size);
    push_u32(out, cd_offset);
    push_u16(out, 0);

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) raise(ErrorCode::IoError, "cannot write " + path.string());
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) raise(ErrorCode::IoError, "short write to " + path.string());
}

std::map<std::string, NpyArray> read_npz(const std::filesystem::path& path) {
    std::map<std::string, NpyArray> arrays;
    for (const ZipEntry& e : read_zip(path)) {
        std::string key = e.name;
        if (key.size() > 4 && key.ends_with(".npy")) key.resize(key.size() - 4);
        arrays.emplace(key, decode_npy(e.data, e.name));
    }
    return arrays;
}

void write_npz(const std::filesystem::path& path,
               const std::map<std::string, NpyArray>& arrays) {
    std::vector<ZipEntry> entries;
    for (const auto& [key, array] : arrays)
        entries.push_back(ZipEntry{key + ".npy", encode_npy(array)});
    write_zip(path, entries);
}

} // namespace floweval::npy
