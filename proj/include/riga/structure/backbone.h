#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace riga {

using Vec3 = Eigen::Vector3d;

/// Residue label. 0..19 are the canonical amino acids in one-letter
/// alphabetical order (ACDEFGHIKLMNPQRSTVWY); kUnk for non-standard residues;
/// kMask only appears in sequences handed to embedding providers.
using AminoAcid = std::uint8_t;

inline constexpr int kNumAminoAcids = 20;
inline constexpr AminoAcid kUnk = 20;
inline constexpr AminoAcid kMask = 21;
inline constexpr std::string_view kAminoAlphabet = "ACDEFGHIKLMNPQRSTVWY";

/// 'X' for UNK, '_' for MASK.
char aa_to_char(AminoAcid aa);
/// Throws ParseError for characters outside the alphabet plus 'X' and '_'.
AminoAcid aa_from_char(char c);
/// Three-letter PDB name; anything non-canonical maps to kUnk.
AminoAcid aa_from_three_letter(std::string_view name);
std::string_view aa_three_letter(AminoAcid aa);

std::string sequence_to_string(const std::vector<AminoAcid>& seq);
std::vector<AminoAcid> sequence_from_string(std::string_view text);

enum class BackboneAtom : int { N = 0, CA = 1, C = 2, O = 3 };

/// Bits set on a residue whose atom was absent and imputed from Cα.
enum MissingAtomFlag : std::uint8_t {
    kMissingN = 1,
    kMissingC = 2,
    kMissingO = 4,
};

struct Residue {
    AminoAcid aa = kUnk;
    Vec3 n = Vec3::Zero();
    Vec3 ca = Vec3::Zero();
    Vec3 c = Vec3::Zero();
    Vec3 o = Vec3::Zero();
    int seq_index = 0;
    std::uint8_t missing = 0;

    const Vec3& atom(BackboneAtom a) const;
    Vec3& atom(BackboneAtom a);
    bool has_atom(BackboneAtom a) const;

    bool operator==(const Residue&) const = default;
};

struct ProteinBackbone {
    std::string chain_id;
    std::vector<Residue> residues;

    std::size_t size() const { return residues.size(); }
    bool empty() const { return residues.empty(); }
    std::vector<AminoAcid> sequence() const;

    bool operator==(const ProteinBackbone&) const = default;
};

}  // namespace riga
