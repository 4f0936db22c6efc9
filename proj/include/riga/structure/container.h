#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "riga/common/blob.h"
#include "riga/structure/backbone.h"

namespace riga {

/**
 * Backbone container (kind "BKBN"). Header fields: format, chain_id, n,
 * sequence (one letter per residue, 'X' = UNK), seq_index, missing (atom
 * flag bits per residue). Block "coords" holds n x 4 x 3 coordinates in
 * N, CA, C, O order; float32 by default, float64 when requested.
 */
Blob backbone_to_blob(const ProteinBackbone& backbone, bool float64 = false);
ProteinBackbone backbone_from_blob(const Blob& blob);

std::vector<std::uint8_t> encode_backbone(const ProteinBackbone& backbone, bool float64 = false);
ProteinBackbone decode_backbone(const std::vector<std::uint8_t>& bytes);

}  // namespace riga
