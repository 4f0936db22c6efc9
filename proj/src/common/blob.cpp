#include "riga/common/blob.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "riga/common/error.h"

namespace riga {

namespace {

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U value) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
}

template <typename U>
U get_le(const std::uint8_t* p) {
    U value = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(p[i]) << (8 * i);
    return value;
}

std::size_t dtype_size(const std::string& dtype) {
    if (dtype == "float32" || dtype == "int32") return 4;
    if (dtype == "float64") return 8;
    throw ParseError("unknown block dtype '" + dtype + "'");
}

}  // namespace

std::int64_t BlobBlock::element_count() const {
    std::int64_t count = 1;
    for (auto s : shape) count *= s;
    return count;
}

std::vector<double> BlobBlock::to_doubles() const {
    const std::size_t width = dtype_size(dtype);
    if (dtype == "int32") throw ParseError("block '" + name + "' is not floating point");
    std::vector<double> out(bytes.size() / width);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const std::uint8_t* p = bytes.data() + i * width;
        if (width == 4)
            out[i] = std::bit_cast<float>(get_le<std::uint32_t>(p));
        else
            out[i] = std::bit_cast<double>(get_le<std::uint64_t>(p));
    }
    return out;
}

std::vector<std::int32_t> BlobBlock::to_int32() const {
    if (dtype != "int32") throw ParseError("block '" + name + "' is not int32");
    std::vector<std::int32_t> out(bytes.size() / 4);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::int32_t>(get_le<std::uint32_t>(bytes.data() + 4 * i));
    return out;
}

const BlobBlock& Blob::block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return b;
    throw ParseError("container has no block named '" + name + "'");
}

bool Blob::has_block(const std::string& name) const {
    for (const auto& b : blocks)
        if (b.name == name) return true;
    return false;
}

BlobBlock make_float_block(const std::string& name, std::vector<std::int64_t> shape,
                           std::span<const double> values, bool float64) {
    BlobBlock block{name, float64 ? "float64" : "float32", std::move(shape), {}};
    if (block.element_count() != static_cast<std::int64_t>(values.size()))
        throw ShapeError("block '" + name + "' shape does not match value count");
    block.bytes.reserve(values.size() * (float64 ? 8 : 4));
    for (double v : values) {
        if (float64)
            put_le(block.bytes, std::bit_cast<std::uint64_t>(v));
        else
            put_le(block.bytes, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
    return block;
}

BlobBlock make_int32_block(const std::string& name, std::vector<std::int64_t> shape,
                           std::span<const std::int32_t> values) {
    BlobBlock block{name, "int32", std::move(shape), {}};
    if (block.element_count() != static_cast<std::int64_t>(values.size()))
        throw ShapeError("block '" + name + "' shape does not match value count");
    block.bytes.reserve(values.size() * 4);
    for (auto v : values) put_le(block.bytes, static_cast<std::uint32_t>(v));
    return block;
}

std::vector<std::uint8_t> encode_blob(const Blob& blob) {
    if (blob.kind.size() != 4) throw InvalidParameter("container kind must be four characters");
    nlohmann::json header = blob.header;
    header["blocks"] = nlohmann::json::array();
    for (const auto& b : blob.blocks)
        header["blocks"].push_back({{"name", b.name}, {"dtype", b.dtype}, {"shape", b.shape}});
    const std::string text = header.dump();

    std::vector<std::uint8_t> out;
    const std::string magic = "RIGA" + blob.kind;
    out.insert(out.end(), magic.begin(), magic.end());
    put_le(out, kBlobVersion);
    put_le(out, static_cast<std::uint64_t>(text.size()));
    out.insert(out.end(), text.begin(), text.end());
    for (const auto& b : blob.blocks) {
        put_le(out, static_cast<std::uint64_t>(b.bytes.size()));
        out.insert(out.end(), b.bytes.begin(), b.bytes.end());
    }
    return out;
}

void write_blob(std::ostream& out, const Blob& blob) {
    const auto bytes = encode_blob(blob);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Blob decode_blob(std::span<const std::uint8_t> bytes, const std::string& expected_kind) {
    std::size_t pos = 0;
    auto need = [&](std::size_t n) {
        if (bytes.size() - pos < n) throw ParseError("container truncated at byte " + std::to_string(pos));
    };
    need(8);
    if (std::memcmp(bytes.data(), "RIGA", 4) != 0) throw ParseError("bad container magic");
    Blob blob;
    blob.kind.assign(reinterpret_cast<const char*>(bytes.data()) + 4, 4);
    if (!expected_kind.empty() && blob.kind != expected_kind)
        throw ParseError("expected container kind " + expected_kind + ", found " + blob.kind);
    pos = 8;
    need(12);
    const auto version = get_le<std::uint32_t>(bytes.data() + pos);
    if (version != kBlobVersion) throw ParseError("unsupported container version " + std::to_string(version));
    const auto hdr_len = get_le<std::uint64_t>(bytes.data() + pos + 4);
    pos += 12;
    need(hdr_len);
    try {
        blob.header = nlohmann::json::parse(bytes.begin() + pos, bytes.begin() + pos + hdr_len);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("container header is not valid JSON: ") + e.what());
    }
    pos += hdr_len;
    if (!blob.header.contains("blocks") || !blob.header["blocks"].is_array())
        throw ParseError("container header lacks a block list");
    for (const auto& desc : blob.header["blocks"]) {
        BlobBlock b;
        b.name = desc.at("name").get<std::string>();
        b.dtype = desc.at("dtype").get<std::string>();
        b.shape = desc.at("shape").get<std::vector<std::int64_t>>();
        need(8);
        const auto len = get_le<std::uint64_t>(bytes.data() + pos);
        pos += 8;
        need(len);
        if (static_cast<std::uint64_t>(b.element_count()) * dtype_size(b.dtype) != len)
            throw ParseError("block '" + b.name + "' length does not match its shape");
        b.bytes.assign(bytes.begin() + pos, bytes.begin() + pos + len);
        pos += len;
        blob.blocks.push_back(std::move(b));
    }
    blob.header.erase("blocks");
    return blob;
}

Blob read_blob(std::istream& in, const std::string& expected_kind) {
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_blob(bytes, expected_kind);
}

void save_blob(const std::string& path, const Blob& blob) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidParameter("cannot open '" + path + "' for writing");
    write_blob(out, blob);
    if (!out) throw InvalidParameter("failed writing '" + path + "'");
}

Blob load_blob(const std::string& path, const std::string& expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidParameter("cannot open '" + path + "'");
    return read_blob(in, expected_kind);
}

}  // namespace riga
