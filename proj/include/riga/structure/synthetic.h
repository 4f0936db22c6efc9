#pragma once

#include <cstdint>
#include <vector>

#include "riga/common/rng.h"
#include "riga/structure/backbone.h"

namespace riga {

/// Ideal-geometry chain grown residue by residue from backbone torsions.
/// phi/psi/omega are in radians; phi[0], psi[n-1] and omega[n-1] are unused.
ProteinBackbone build_backbone_from_torsions(const std::vector<double>& phi, const std::vector<double>& psi,
                                             const std::vector<double>& omega, const std::vector<AminoAcid>& sequence);

struct SyntheticOptions {
    double helix_fraction = 0.5;  // probability a segment is helical rather than extended
    int min_segment = 4;
    int max_segment = 10;
    double torsion_jitter_deg = 12.0;
};

/// Random protein-like backbone with a random canonical sequence.
ProteinBackbone synthetic_backbone(int length, CounterRng& rng, const SyntheticOptions& options = {});

std::vector<ProteinBackbone> synthetic_corpus(int count, int min_length, int max_length, std::uint64_t seed);

}  // namespace riga
