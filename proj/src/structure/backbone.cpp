#include "riga/structure/backbone.h"

#include <algorithm>

#include "riga/common/error.h"

namespace riga {

namespace {

constexpr std::array<std::string_view, kNumAminoAcids> kThreeLetter = {
    "ALA", "CYS", "ASP", "GLU", "PHE", "GLY", "HIS", "ILE", "LYS", "LEU",
    "MET", "ASN", "PRO", "GLN", "ARG", "SER", "THR", "VAL", "TRP", "TYR"};

}  // namespace

char aa_to_char(AminoAcid aa) {
    if (aa < kNumAminoAcids) return kAminoAlphabet[aa];
    return aa == kMask ? '_' : 'X';
}

AminoAcid aa_from_char(char c) {
    if (c == 'X') return kUnk;
    if (c == '_') return kMask;
    const auto pos = kAminoAlphabet.find(c);
    if (pos == std::string_view::npos) throw ParseError(std::string("invalid residue letter '") + c + "'");
    return static_cast<AminoAcid>(pos);
}

AminoAcid aa_from_three_letter(std::string_view name) {
    for (std::size_t i = 0; i < kThreeLetter.size(); ++i)
        if (kThreeLetter[i] == name) return static_cast<AminoAcid>(i);
    return kUnk;
}

std::string_view aa_three_letter(AminoAcid aa) {
    return aa < kNumAminoAcids ? kThreeLetter[aa] : std::string_view("UNK");
}

std::string sequence_to_string(const std::vector<AminoAcid>& seq) {
    std::string out;
    out.reserve(seq.size());
    for (auto aa : seq) out.push_back(aa_to_char(aa));
    return out;
}

std::vector<AminoAcid> sequence_from_string(std::string_view text) {
    std::vector<AminoAcid> out;
    out.reserve(text.size());
    for (char c : text) out.push_back(aa_from_char(c));
    return out;
}

const Vec3& Residue::atom(BackboneAtom a) const {
    switch (a) {
        case BackboneAtom::N: return n;
        case BackboneAtom::CA: return ca;
        case BackboneAtom::C: return c;
        case BackboneAtom::O: return o;
    }
    return ca;
}

Vec3& Residue::atom(BackboneAtom a) {
    return const_cast<Vec3&>(static_cast<const Residue&>(*this).atom(a));
}

bool Residue::has_atom(BackboneAtom a) const {
    switch (a) {
        case BackboneAtom::N: return !(missing & kMissingN);
        case BackboneAtom::CA: return true;
        case BackboneAtom::C: return !(missing & kMissingC);
        case BackboneAtom::O: return !(missing & kMissingO);
    }
    return true;
}

std::vector<AminoAcid> ProteinBackbone::sequence() const {
    std::vector<AminoAcid> seq(residues.size());
    std::transform(residues.begin(), residues.end(), seq.begin(), [](const Residue& r) { return r.aa; });
    return seq;
}

}  // namespace riga
