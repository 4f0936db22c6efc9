#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace riga {

/**
 * Length-prefixed binary container shared by every on-disk format.
 *
 *   magic     8 bytes  "RIGA" + 4-character kind tag
 *   version   u32 LE   currently 1
 *   hdr_len   u64 LE
 *   header    hdr_len bytes of UTF-8 JSON; header["blocks"] lists the
 *             blocks in file order as {name, dtype, shape}
 *   blocks    per block: u64 LE byte length, then raw little-endian data
 *
 * dtype is one of "float32", "float64", "int32".
 */
struct BlobBlock {
    std::string name;
    std::string dtype;
    std::vector<std::int64_t> shape;
    std::vector<std::uint8_t> bytes;

    std::int64_t element_count() const;
    std::vector<double> to_doubles() const;
    std::vector<std::int32_t> to_int32() const;
};

struct Blob {
    std::string kind;  // four characters
    nlohmann::json header = nlohmann::json::object();
    std::vector<BlobBlock> blocks;

    const BlobBlock& block(const std::string& name) const;
    bool has_block(const std::string& name) const;
};

inline constexpr std::uint32_t kBlobVersion = 1;

BlobBlock make_float_block(const std::string& name, std::vector<std::int64_t> shape,
                           std::span<const double> values, bool float64 = false);
BlobBlock make_int32_block(const std::string& name, std::vector<std::int64_t> shape,
                           std::span<const std::int32_t> values);

void write_blob(std::ostream& out, const Blob& blob);
std::vector<std::uint8_t> encode_blob(const Blob& blob);
/// Throws ParseError on truncation, bad magic, or a kind other than `expected_kind`
/// (pass an empty string to accept any kind).
Blob read_blob(std::istream& in, const std::string& expected_kind);
Blob decode_blob(std::span<const std::uint8_t> bytes, const std::string& expected_kind);

void save_blob(const std::string& path, const Blob& blob);
Blob load_blob(const std::string& path, const std::string& expected_kind);

}  // namespace riga
