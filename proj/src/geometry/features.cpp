#include "riga/geometry/features.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Geometry>

#include "riga/common/error.h"

namespace riga {

namespace {

constexpr BackboneAtom kAtoms[4] = {BackboneAtom::N, BackboneAtom::CA, BackboneAtom::C, BackboneAtom::O};
constexpr int kIntraPairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
constexpr double kPeptideBondMax = 2.0;

void rbf_fill(double d, const std::vector<double>& centers, double sigma, double* out) {
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (std::size_t m = 0; m < centers.size(); ++m) {
        const double diff = d - centers[m];
        out[m] = std::exp(-diff * diff * inv);
    }
}

double rbf_sigma(const FeatureConfig& cfg) {
    return (cfg.rbf_max - cfg.rbf_min) / (cfg.rbf_count - 1);
}

}  // namespace

void FeatureConfig::validate() const {
    if (k < 1) throw InvalidParameter("k must be >= 1");
    if (!(rbf_min < rbf_max)) throw InvalidParameter("rbf_min must be < rbf_max");
    if (rbf_count < 2) throw InvalidParameter("rbf_count must be >= 2");
    if (relpos_clamp < 0) throw InvalidParameter("relpos_clamp must be >= 0");
}

std::vector<int> parse_secondary_structure(std::string_view annotation) {
    std::vector<int> out;
    out.reserve(annotation.size());
    for (char c : annotation) {
        if (c == '\n' || c == '\r') continue;
        if (c == ' ' || c == '-' || c == 'C' || c == 'L') c = '~';
        if (c == '?') {
            out.push_back(kSecondaryUnknown);
            continue;
        }
        const auto pos = kSecondaryClasses.find(c);
        if (pos == std::string_view::npos)
            throw ParseError(std::string("unknown secondary-structure code '") + c + "'");
        out.push_back(static_cast<int>(pos));
    }
    return out;
}

double dihedral(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d) {
    const Vec3 b1 = b - a;
    const Vec3 b2 = c - b;
    const Vec3 b3 = d - c;
    const Vec3 n1 = b1.cross(b2);
    const Vec3 n2 = b2.cross(b3);
    return std::atan2(b2.normalized().dot(n1.cross(n2)), n1.dot(n2));
}

DihedralSet dihedral_angles(const ProteinBackbone& backbone) {
    const std::size_t n = backbone.size();
    DihedralSet out;
    out.phi.assign(n, 0.0);
    out.psi.assign(n, 0.0);
    out.omega.assign(n, 0.0);
    out.phi_defined.assign(n, false);
    out.psi_defined.assign(n, false);
    out.omega_defined.assign(n, false);
    const auto& res = backbone.residues;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const Residue& a = res[i];
        const Residue& b = res[i + 1];
        if (!a.has_atom(BackboneAtom::C) || !b.has_atom(BackboneAtom::N)) continue;
        if ((b.n - a.c).norm() > kPeptideBondMax) continue;
        const bool a_n = a.has_atom(BackboneAtom::N);
        const bool b_c = b.has_atom(BackboneAtom::C);
        if (a_n) {
            out.psi[i] = dihedral(a.n, a.ca, a.c, b.n);
            out.psi_defined[i] = true;
        }
        out.omega[i] = dihedral(a.ca, a.c, b.n, b.ca);
        out.omega_defined[i] = true;
        if (b_c) {
            out.phi[i + 1] = dihedral(a.c, b.n, b.ca, b.c);
            out.phi_defined[i + 1] = true;
        }
    }
    return out;
}

std::vector<double> rbf_centers(const FeatureConfig& cfg) {
    cfg.validate();
    std::vector<double> centers(static_cast<std::size_t>(cfg.rbf_count));
    const double step = rbf_sigma(cfg);
    for (int m = 0; m < cfg.rbf_count; ++m) centers[m] = cfg.rbf_min + step * m;
    return centers;
}

std::vector<double> rbf_encode(double distance, const FeatureConfig& cfg) {
    const auto centers = rbf_centers(cfg);
    std::vector<double> out(centers.size());
    rbf_fill(distance, centers, rbf_sigma(cfg), out.data());
    return out;
}

FeatureLayout FeatureLayout::from_config(const FeatureConfig& cfg) {
    FeatureLayout layout;
    auto add = [](std::vector<FeatureFamily>& fams, int& dim, const char* name, int width) {
        fams.push_back({name, dim, width});
        dim += width;
    };
    if (cfg.intra_rbf) add(layout.node, layout.node_dim, "intra_rbf", 6 * cfg.rbf_count);
    if (cfg.dihedrals) {
        add(layout.node, layout.node_dim, "dihedral_trig", 6);
        add(layout.node, layout.node_dim, "dihedral_mask", 3);
    }
    if (cfg.secondary_structure) add(layout.node, layout.node_dim, "secondary_structure", kSecondaryChannels);
    if (cfg.atom_flags) add(layout.node, layout.node_dim, "atom_flags", 3);
    if (cfg.inter_rbf) add(layout.edge, layout.edge_dim, "inter_rbf", 16 * cfg.rbf_count);
    if (cfg.orientation) add(layout.edge, layout.edge_dim, "orientation", 4);
    if (cfg.relative_position) add(layout.edge, layout.edge_dim, "relative_position", 2 * cfg.relpos_clamp + 1);
    return layout;
}

const FeatureFamily* FeatureLayout::find_node(std::string_view name) const {
    for (const auto& f : node)
        if (f.name == name) return &f;
    return nullptr;
}

const FeatureFamily* FeatureLayout::find_edge(std::string_view name) const {
    for (const auto& f : edge)
        if (f.name == name) return &f;
    return nullptr;
}

std::vector<int> ResidueGraph::reverse_edges() const {
    std::vector<int> rev(static_cast<std::size_t>(edge_count()), -1);
    for (int e = 0; e < edge_count(); ++e) {
        const int i = receiver(e);
        const int j = neighbor(e);
        for (int s = 0; s < k; ++s) {
            if (neighbors[static_cast<std::size_t>(j * k + s)] == i) {
                rev[static_cast<std::size_t>(e)] = j * k + s;
                break;
            }
        }
    }
    return rev;
}

std::vector<int> ResidueGraph::receivers() const {
    std::vector<int> out(static_cast<std::size_t>(edge_count()));
    for (int e = 0; e < edge_count(); ++e) out[static_cast<std::size_t>(e)] = receiver(e);
    return out;
}

std::int64_t distance_key(double squared_distance) {
    return std::llround(squared_distance * kKnnTieQuantum);
}

std::vector<int> knn_neighbors(const ProteinBackbone& backbone, int k) {
    const int n = static_cast<int>(backbone.size());
    const int kk = std::min(k, n - 1);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n * std::max(kk, 0)));
    std::vector<std::pair<std::int64_t, int>> cand;
    for (int i = 0; i < n; ++i) {
        cand.clear();
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cand.emplace_back(distance_key((backbone.residues[i].ca - backbone.residues[j].ca).squaredNorm()), j);
        }
        std::partial_sort(cand.begin(), cand.begin() + kk, cand.end());
        for (int s = 0; s < kk; ++s) out.push_back(cand[static_cast<std::size_t>(s)].second);
    }
    return out;
}

ResidueGraph build_knn_graph(const ProteinBackbone& backbone, const FeatureConfig& cfg,
                             const std::vector<int>& secondary) {
    cfg.validate();
    const int n = static_cast<int>(backbone.size());
    if (n < 2) throw GraphTooSmall("k-NN graph needs at least 2 residues, got " + std::to_string(n));
    if (!secondary.empty() && static_cast<int>(secondary.size()) != n)
        throw InvalidParameter("secondary-structure annotation length does not match the backbone");

    ResidueGraph g;
    g.n = n;
    g.k = std::min(cfg.k, n - 1);
    g.layout = FeatureLayout::from_config(cfg);
    g.neighbors = knn_neighbors(backbone, cfg.k);

    const auto frames = local_frames(backbone);
    const auto dihedrals = dihedral_angles(backbone);
    const auto centers = rbf_centers(cfg);
    const double sigma = rbf_sigma(cfg);
    const int R = cfg.rbf_count;
    const auto& res = backbone.residues;

    g.node_feats = RowMatrixXd::Zero(n, g.layout.node_dim);
    for (int i = 0; i < n; ++i) {
        double* row = g.node_feats.row(i).data();
        const Residue& r = res[static_cast<std::size_t>(i)];
        if (const auto* f = g.layout.find_node("intra_rbf")) {
            for (int p = 0; p < 6; ++p) {
                const auto a = kAtoms[kIntraPairs[p][0]];
                const auto b = kAtoms[kIntraPairs[p][1]];
                if (!r.has_atom(a) || !r.has_atom(b)) continue;
                rbf_fill((r.atom(a) - r.atom(b)).norm(), centers, sigma, row + f->offset + p * R);
            }
        }
        if (const auto* f = g.layout.find_node("dihedral_trig")) {
            const double angles[3] = {dihedrals.phi[i], dihedrals.psi[i], dihedrals.omega[i]};
            const bool defined[3] = {dihedrals.phi_defined[i], dihedrals.psi_defined[i], dihedrals.omega_defined[i]};
            const auto* mask = g.layout.find_node("dihedral_mask");
            for (int t = 0; t < 3; ++t) {
                if (!defined[t]) continue;
                row[f->offset + 2 * t] = std::sin(angles[t]);
                row[f->offset + 2 * t + 1] = std::cos(angles[t]);
                row[mask->offset + t] = 1.0;
            }
        }
        if (const auto* f = g.layout.find_node("secondary_structure")) {
            const int cls = secondary.empty() ? kSecondaryUnknown : secondary[static_cast<std::size_t>(i)];
            if (cls < 0 || cls >= kSecondaryChannels) throw InvalidParameter("secondary-structure class out of range");
            row[f->offset + cls] = 1.0;
        }
        if (const auto* f = g.layout.find_node("atom_flags")) {
            row[f->offset + 0] = (r.missing & kMissingN) ? 1.0 : 0.0;
            row[f->offset + 1] = (r.missing & kMissingC) ? 1.0 : 0.0;
            row[f->offset + 2] = (r.missing & kMissingO) ? 1.0 : 0.0;
        }
    }

    const int E = g.edge_count();
    g.edge_feats = RowMatrixXd::Zero(E, g.layout.edge_dim);
    const auto* inter = g.layout.find_edge("inter_rbf");
    const auto* orient = g.layout.find_edge("orientation");
    const auto* relpos = g.layout.find_edge("relative_position");
    for (int e = 0; e < E; ++e) {
        const int i = g.receiver(e);
        const int j = g.neighbor(e);
        const Residue& ri = res[static_cast<std::size_t>(i)];
        const Residue& rj = res[static_cast<std::size_t>(j)];
        double* row = g.edge_feats.row(e).data();
        if (inter) {
            for (int a = 0; a < 4; ++a) {
                if (!ri.has_atom(kAtoms[a])) continue;
                for (int b = 0; b < 4; ++b) {
                    if (!rj.has_atom(kAtoms[b])) continue;
                    const double d = (ri.atom(kAtoms[a]) - rj.atom(kAtoms[b])).norm();
                    rbf_fill(d, centers, sigma, row + inter->offset + (a * 4 + b) * R);
                }
            }
        }
        if (orient && frames[static_cast<std::size_t>(i)].valid && frames[static_cast<std::size_t>(j)].valid) {
            const auto q = relative_orientation(frames[static_cast<std::size_t>(i)], frames[static_cast<std::size_t>(j)]);
            for (int c = 0; c < 4; ++c) row[orient->offset + c] = q[c];
        }
        if (relpos) {
            const int offset = std::clamp(rj.seq_index - ri.seq_index, -cfg.relpos_clamp, cfg.relpos_clamp);
            row[relpos->offset + offset + cfg.relpos_clamp] = 1.0;
        }
    }
    return g;
}

}  // namespace riga
