#include "riga/structure/container.h"

#include "riga/common/error.h"

namespace riga {

Blob backbone_to_blob(const ProteinBackbone& backbone, bool float64) {
    Blob blob;
    blob.kind = "BKBN";
    const auto n = static_cast<std::int64_t>(backbone.size());
    std::vector<int> seq_index;
    std::vector<int> missing;
    std::vector<double> coords;
    coords.reserve(backbone.size() * 12);
    for (const auto& r : backbone.residues) {
        seq_index.push_back(r.seq_index);
        missing.push_back(r.missing);
        for (const Vec3* p : {&r.n, &r.ca, &r.c, &r.o})
            for (int k = 0; k < 3; ++k) coords.push_back((*p)[k]);
    }
    blob.header = {{"format", "riga-backbone"},
                   {"chain_id", backbone.chain_id},
                   {"n", n},
                   {"sequence", sequence_to_string(backbone.sequence())},
                   {"seq_index", seq_index},
                   {"missing", missing}};
    blob.blocks.push_back(make_float_block("coords", {n, 4, 3}, coords, float64));
    return blob;
}

ProteinBackbone backbone_from_blob(const Blob& blob) {
    try {
        ProteinBackbone b;
        b.chain_id = blob.header.at("chain_id").get<std::string>();
        const auto n = blob.header.at("n").get<std::size_t>();
        const auto seq = sequence_from_string(blob.header.at("sequence").get<std::string>());
        const auto seq_index = blob.header.at("seq_index").get<std::vector<int>>();
        const auto missing = blob.header.at("missing").get<std::vector<int>>();
        const auto coords = blob.block("coords").to_doubles();
        if (seq.size() != n || seq_index.size() != n || missing.size() != n || coords.size() != n * 12)
            throw ParseError("backbone container fields disagree on residue count");
        b.residues.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            auto& r = b.residues[i];
            r.aa = seq[i];
            r.seq_index = seq_index[i];
            r.missing = static_cast<std::uint8_t>(missing[i]);
            Vec3* atoms[4] = {&r.n, &r.ca, &r.c, &r.o};
            for (int a = 0; a < 4; ++a)
                for (int k = 0; k < 3; ++k) (*atoms[a])[k] = coords[i * 12 + a * 3 + k];
        }
        return b;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed backbone container header: ") + e.what());
    }
}

std::vector<std::uint8_t> encode_backbone(const ProteinBackbone& backbone, bool float64) {
    return encode_blob(backbone_to_blob(backbone, float64));
}

ProteinBackbone decode_backbone(const std::vector<std::uint8_t>& bytes) {
    return backbone_from_blob(decode_blob(bytes, "BKBN"));
}

}  // namespace riga
