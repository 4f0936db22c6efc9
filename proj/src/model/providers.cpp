#include "riga/model/providers.h"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <numeric>

#include "riga/common/error.h"
#include "riga/common/rng.h"

namespace riga::model {

std::string to_string(PriorKind kind) { return kind == PriorKind::Structure ? "structure" : "sequence"; }

namespace {

PriorKind kind_from_string(const std::string& s) {
    if (s == "structure") return PriorKind::Structure;
    if (s == "sequence") return PriorKind::Sequence;
    throw ParseError("unknown prior kind '" + s + "'");
}

std::vector<int> iota_positions(std::size_t n) {
    std::vector<int> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    return pos;
}

}  // namespace

std::string sequence_hash(const std::vector<AminoAcid>& tokens) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(sequence_to_string(tokens))));
    return buf;
}

PriorEmbedding EmbeddingProvider::embed_structure(int, const ProteinBackbone*) const {
    throw InvalidParameter("provider '" + tag() + "' does not supply structure priors");
}

PriorEmbedding EmbeddingProvider::embed_sequence(const std::vector<AminoAcid>&) const {
    throw InvalidParameter("provider '" + tag() + "' does not supply sequence priors");
}

StubProvider::StubProvider(PriorKind kind, int dim, std::uint64_t seed) : kind_(kind), dim_(dim), seed_(seed) {
    if (dim < 0) throw InvalidParameter("embedding dim must be >= 0");
}

PriorEmbedding StubProvider::embed_tokens(const std::vector<AminoAcid>& tokens) const {
    PriorEmbedding out;
    out.values.resize(static_cast<Eigen::Index>(tokens.size()), dim_);
    out.positions = iota_positions(tokens.size());
    const std::uint64_t base = splitmix64_finalize(seed_ ^ (kind_ == PriorKind::Structure ? 0x57ULL : 0x5EULL));
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const std::uint64_t row = splitmix64_finalize(splitmix64_finalize(base ^ tokens[i]) ^ (i + 1));
        for (int c = 0; c < dim_; ++c) {
            const std::uint64_t h = splitmix64_finalize(row + static_cast<std::uint64_t>(c) * 0x9E3779B97F4A7C15ULL);
            out.values(static_cast<Eigen::Index>(i), c) = static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;
        }
    }
    return out;
}

PriorEmbedding StubProvider::embed_structure(int n, const ProteinBackbone*) const {
    if (kind_ != PriorKind::Structure) return EmbeddingProvider::embed_structure(n, nullptr);
    return embed_tokens(std::vector<AminoAcid>(static_cast<std::size_t>(n), kMask));
}

PriorEmbedding StubProvider::embed_sequence(const std::vector<AminoAcid>& tokens) const {
    if (kind_ != PriorKind::Sequence) return EmbeddingProvider::embed_sequence(tokens);
    return embed_tokens(tokens);
}

Blob embedding_to_blob(const EmbeddingFile& file) {
    const auto& e = file.embedding;
    Blob blob;
    blob.kind = "EMBD";
    blob.header = {{"format", "riga-embedding"},
                   {"n", e.values.rows()},
                   {"dim", e.values.cols()},
                   {"provider", file.provider},
                   {"kind", to_string(file.kind)},
                   {"sequence_hash", file.hash},
                   {"sequence", file.sequence}};
    blob.blocks.push_back(make_float_block("embeddings", {e.values.rows(), e.values.cols()},
                                           std::span<const double>(e.values.data(), e.values.size())));
    if (!e.positions.empty())
        blob.blocks.push_back(make_int32_block("positions", {static_cast<std::int64_t>(e.positions.size())}, e.positions));
    return blob;
}

EmbeddingFile embedding_from_blob(const Blob& blob) {
    EmbeddingFile file;
    try {
        const auto n = blob.header.at("n").get<Eigen::Index>();
        const auto dim = blob.header.at("dim").get<Eigen::Index>();
        file.provider = blob.header.value("provider", std::string());
        file.kind = kind_from_string(blob.header.at("kind").get<std::string>());
        file.hash = blob.header.value("sequence_hash", std::string());
        file.sequence = blob.header.value("sequence", std::string());
        const auto values = blob.block("embeddings").to_doubles();
        if (values.size() != static_cast<std::size_t>(n * dim))
            throw ParseError("embedding block size disagrees with header");
        file.embedding.values = Eigen::Map<const RowMatrixXd>(values.data(), n, dim);
        file.embedding.positions = blob.has_block("positions") ? blob.block("positions").to_int32()
                                                               : iota_positions(static_cast<std::size_t>(n));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed embedding header: ") + e.what());
    }
    return file;
}

FileEmbeddingProvider::FileEmbeddingProvider(const std::string& path, PriorKind kind) : path_(path), kind_(kind) {
    namespace fs = std::filesystem;
    std::vector<std::string> files;
    if (fs::is_directory(path)) {
        for (const auto& entry : fs::directory_iterator(path))
            if (entry.path().extension() == ".emb") files.push_back(entry.path().string());
        std::sort(files.begin(), files.end());
    } else {
        files.push_back(path);
    }
    for (const auto& f : files) {
        EmbeddingFile ef = embedding_from_blob(load_blob(f, "EMBD"));
        if (ef.kind != kind) continue;
        const int d = static_cast<int>(ef.embedding.values.cols());
        if (dim_ == 0) dim_ = d;
        if (d != dim_) throw ShapeError("embedding files under '" + path + "' disagree on dim");
        by_hash_.emplace(ef.hash, std::move(ef));
    }
    if (by_hash_.empty()) throw InvalidParameter("no " + to_string(kind) + " embeddings found at '" + path + "'");
}

PriorEmbedding FileEmbeddingProvider::embed_structure(int n, const ProteinBackbone* backbone) const {
    if (kind_ != PriorKind::Structure) return EmbeddingProvider::embed_structure(n, backbone);
    if (backbone) {
        auto it = by_hash_.find(sequence_hash(backbone->sequence()));
        if (it != by_hash_.end()) return it->second.embedding;
    }
    for (const auto& [_, ef] : by_hash_)
        if (ef.embedding.values.rows() == n) return ef.embedding;
    throw ShapeError("no structure embedding with " + std::to_string(n) + " rows at '" + path_ + "'");
}

PriorEmbedding FileEmbeddingProvider::embed_sequence(const std::vector<AminoAcid>& tokens) const {
    if (kind_ != PriorKind::Sequence) return EmbeddingProvider::embed_sequence(tokens);
    const auto hash = sequence_hash(tokens);
    auto it = by_hash_.find(hash);
    if (it == by_hash_.end())
        throw InvalidParameter("no sequence embedding for hash " + hash + " at '" + path_ + "'");
    return it->second.embedding;
}

OracleSequenceProvider::OracleSequenceProvider(std::shared_ptr<const EmbeddingProvider> base,
                                               std::vector<AminoAcid> truth)
    : base_(std::move(base)), truth_(std::move(truth)) {}

PriorEmbedding OracleSequenceProvider::embed_sequence(const std::vector<AminoAcid>& tokens) const {
    const bool all_mask = std::all_of(tokens.begin(), tokens.end(), [](AminoAcid a) { return a == kMask; });
    if (all_mask) return base_->embed_sequence(tokens);
    if (tokens.size() != truth_.size()) throw ShapeError("oracle provider queried with a sequence of the wrong length");
    return base_->embed_sequence(truth_);
}

std::shared_ptr<EmbeddingProvider> make_provider(const std::string& spec, PriorKind kind, int stub_dim,
                                                 std::uint64_t stub_seed) {
    if (spec == "stub") return std::make_shared<StubProvider>(kind, stub_dim, stub_seed);
    return std::make_shared<FileEmbeddingProvider>(spec, kind);
}

}  // namespace riga::model
