#pragma once

#include <string>
#include <string_view>

#include "riga/structure/backbone.h"

namespace riga {

/**
 * Reads the backbone of one chain from PDB text.
 *
 * Only ATOM records of the first model are read, using the fixed-width
 * v3.3 columns. HETATM records, alternate locations other than blank/'A',
 * and residues carrying an insertion code are skipped. Residues without a
 * Cα are dropped; missing N, C or O are imputed at the Cα position and
 * flagged on the residue. An empty `chain` selects the first chain.
 *
 * Errors: ParseError (empty or garbled text), ChainNotFound, EmptyBackbone.
 */
ProteinBackbone parse_pdb(std::string_view text, std::string_view chain);

ProteinBackbone read_pdb_file(const std::string& path, std::string_view chain);

/// ATOM records for the backbone; imputed atoms are omitted so that
/// parse_pdb(write_pdb(b)) reproduces the same flags.
std::string write_pdb(const ProteinBackbone& backbone);

}  // namespace riga
