#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "riga/common/blob.h"
#include "riga/geometry/features.h"
#include "riga/structure/backbone.h"

namespace riga::model {

enum class PriorKind { Structure, Sequence };

std::string to_string(PriorKind kind);

/// Per-residue prior vectors. `positions[r]` is the residue index row r
/// describes; fusion rejects anything but 0, 1, ..., n-1.
struct PriorEmbedding {
    RowMatrixXd values;
    std::vector<int> positions;
};

/// Hex FNV-1a hash of the one-letter sequence ('_' = MASK, 'X' = UNK).
std::string sequence_hash(const std::vector<AminoAcid>& tokens);

/**
 * Source of frozen per-residue prior embeddings. Implementations are
 * deterministic and safe for concurrent const calls. A sequence-prior
 * provider must accept an all-MASK sequence.
 */
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual PriorKind kind() const = 0;
    virtual int dim() const = 0;
    virtual std::string tag() const = 0;
    /// Structure prior for an n-residue chain; `backbone` may be null when
    /// only features are available.
    virtual PriorEmbedding embed_structure(int n, const ProteinBackbone* backbone) const;
    virtual PriorEmbedding embed_sequence(const std::vector<AminoAcid>& tokens) const;
};

/// Pseudo-embeddings from a seeded hash of (kind, token, position, channel),
/// uniform in [-1, 1). The structure stub hashes position only.
class StubProvider final : public EmbeddingProvider {
public:
    StubProvider(PriorKind kind, int dim, std::uint64_t seed = 0x5eed);
    PriorKind kind() const override { return kind_; }
    int dim() const override { return dim_; }
    std::string tag() const override { return "stub"; }
    PriorEmbedding embed_structure(int n, const ProteinBackbone* backbone) const override;
    PriorEmbedding embed_sequence(const std::vector<AminoAcid>& tokens) const override;

private:
    PriorEmbedding embed_tokens(const std::vector<AminoAcid>& tokens) const;
    PriorKind kind_;
    int dim_;
    std::uint64_t seed_;
};

/**
 * Embedding file (kind "EMBD"). Header: format, n, dim, provider, kind,
 * sequence_hash, sequence. Blocks: "embeddings" float32 [n, dim] and
 * optional "positions" int32 [n].
 */
struct EmbeddingFile {
    PriorEmbedding embedding;
    std::string provider;
    PriorKind kind = PriorKind::Sequence;
    std::string sequence;
    std::string hash;
};

Blob embedding_to_blob(const EmbeddingFile& file);
EmbeddingFile embedding_from_blob(const Blob& blob);

/// Serves embeddings exported out-of-band. `path` is one embedding file or a
/// directory of them (*.emb). Sequence queries are matched by sequence hash;
/// a miss throws InvalidParameter naming the hash.
class FileEmbeddingProvider final : public EmbeddingProvider {
public:
    FileEmbeddingProvider(const std::string& path, PriorKind kind);
    PriorKind kind() const override { return kind_; }
    int dim() const override { return dim_; }
    std::string tag() const override { return "file:" + path_; }
    PriorEmbedding embed_structure(int n, const ProteinBackbone* backbone) const override;
    PriorEmbedding embed_sequence(const std::vector<AminoAcid>& tokens) const override;

private:
    std::string path_;
    PriorKind kind_;
    int dim_ = 0;
    std::map<std::string, EmbeddingFile> by_hash_;
};

/// Sequence prior that answers an all-MASK query through `base` and every
/// other query with base's embedding of the true sequence.
class OracleSequenceProvider final : public EmbeddingProvider {
public:
    OracleSequenceProvider(std::shared_ptr<const EmbeddingProvider> base, std::vector<AminoAcid> truth);
    PriorKind kind() const override { return PriorKind::Sequence; }
    int dim() const override { return base_->dim(); }
    std::string tag() const override { return "oracle(" + base_->tag() + ")"; }
    PriorEmbedding embed_sequence(const std::vector<AminoAcid>& tokens) const override;

private:
    std::shared_ptr<const EmbeddingProvider> base_;
    std::vector<AminoAcid> truth_;
};

/// "stub" or a path; kind decides which query the provider serves.
std::shared_ptr<EmbeddingProvider> make_provider(const std::string& spec, PriorKind kind, int stub_dim,
                                                 std::uint64_t stub_seed);

}  // namespace riga::model
