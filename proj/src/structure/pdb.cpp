#include "riga/structure/pdb.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "riga/common/error.h"

namespace riga {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// 1-based inclusive PDB columns.
std::string_view columns(std::string_view line, std::size_t first, std::size_t last) {
    if (line.size() < first) return {};
    return line.substr(first - 1, std::min(last, line.size()) - first + 1);
}

double parse_coord(std::string_view field, std::size_t line_no) {
    field = trim(field);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_no) + ": malformed coordinate '" + std::string(field) + "'");
    return value;
}

int parse_int(std::string_view field, std::size_t line_no, const char* what) {
    field = trim(field);
    int value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc() || ptr != field.data() + field.size())
        throw ParseError("line " + std::to_string(line_no) + ": malformed " + what + " '" + std::string(field) + "'");
    return value;
}

struct PendingResidue {
    AminoAcid aa = kUnk;
    int seq_index = 0;
    std::optional<Vec3> atoms[4];
};

}  // namespace

ProteinBackbone parse_pdb(std::string_view text, std::string_view chain) {
    std::vector<PendingResidue> pending;
    bool any_atom = false;
    bool chain_seen = false;
    std::string selected(chain);
    std::optional<int> current_seq;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (line.starts_with("ENDMDL")) break;
        if (!line.starts_with("ATOM  ")) continue;
        if (line.size() < 54) throw ParseError("line " + std::to_string(line_no) + ": ATOM record too short");
        any_atom = true;

        const std::string chain_id(1, line[21]);
        if (selected.empty()) selected = chain_id;
        if (chain_id != selected) continue;
        chain_seen = true;

        const char altloc = line[16];
        const char icode = line[26];
        const int seq = parse_int(columns(line, 23, 26), line_no, "residue number");
        const double x = parse_coord(columns(line, 31, 38), line_no);
        const double y = parse_coord(columns(line, 39, 46), line_no);
        const double z = parse_coord(columns(line, 47, 54), line_no);
        if (altloc != ' ' && altloc != 'A') continue;
        if (icode != ' ') continue;

        if (!current_seq || *current_seq != seq) {
            PendingResidue r;
            r.aa = aa_from_three_letter(trim(columns(line, 18, 20)));
            r.seq_index = seq;
            pending.push_back(r);
            current_seq = seq;
        }
        const std::string_view name = trim(columns(line, 13, 16));
        int slot = -1;
        if (name == "N") slot = 0;
        else if (name == "CA") slot = 1;
        else if (name == "C") slot = 2;
        else if (name == "O") slot = 3;
        if (slot < 0) continue;
        auto& atom = pending.back().atoms[slot];
        if (!atom) atom = Vec3(x, y, z);
    }

    if (!any_atom) throw ParseError("no ATOM records found");
    if (!chain_seen) throw ChainNotFound("chain '" + selected + "' not present");

    ProteinBackbone backbone;
    backbone.chain_id = selected;
    for (const auto& p : pending) {
        if (!p.atoms[1]) continue;
        Residue r;
        r.aa = p.aa;
        r.seq_index = p.seq_index;
        r.ca = *p.atoms[1];
        r.n = p.atoms[0].value_or(r.ca);
        r.c = p.atoms[2].value_or(r.ca);
        r.o = p.atoms[3].value_or(r.ca);
        if (!p.atoms[0]) r.missing |= kMissingN;
        if (!p.atoms[2]) r.missing |= kMissingC;
        if (!p.atoms[3]) r.missing |= kMissingO;
        backbone.residues.push_back(r);
    }
    if (backbone.residues.empty()) throw EmptyBackbone("chain '" + selected + "' has no residue with a CA atom");
    return backbone;
}

ProteinBackbone read_pdb_file(const std::string& path, std::string_view chain) {
    std::ifstream in(path);
    if (!in) throw InvalidParameter("cannot open PDB file '" + path + "'");
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_pdb(buffer.str(), chain);
}

std::string write_pdb(const ProteinBackbone& backbone) {
    static constexpr const char* kNames[4] = {" N  ", " CA ", " C  ", " O  "};
    static constexpr const char* kElements[4] = {"N", "C", "C", "O"};
    const char chain = backbone.chain_id.empty() ? 'A' : backbone.chain_id[0];
    std::string out;
    char line[96];
    int serial = 1;
    for (const auto& r : backbone.residues) {
        const std::string res_name(aa_three_letter(r.aa));
        for (int a = 0; a < 4; ++a) {
            const auto atom = static_cast<BackboneAtom>(a);
            if (!r.has_atom(atom)) continue;
            const Vec3& p = r.atom(atom);
            std::snprintf(line, sizeof(line), "ATOM  %5d %-4s%c%3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f          %2s\n",
                          serial++ % 100000, kNames[a], ' ', res_name.c_str(), chain, r.seq_index, ' ', p.x(),
                          p.y(), p.z(), 1.0, 0.0, kElements[a]);
            out += line;
        }
    }
    std::snprintf(line, sizeof(line), "TER   %5d      %3s %c%4d\nEND\n", serial % 100000,
                  backbone.residues.empty() ? "UNK" : std::string(aa_three_letter(backbone.residues.back().aa)).c_str(),
                  chain, backbone.residues.empty() ? 0 : backbone.residues.back().seq_index);
    out += line;
    return out;
}

}  // namespace riga
