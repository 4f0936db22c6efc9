#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "riga/geometry/frames.h"
#include "riga/structure/backbone.h"

namespace riga {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FeatureConfig {
    int k = 48;
    int rbf_count = 16;
    double rbf_min = 0.0;
    double rbf_max = 20.0;
    int relpos_clamp = 32;

    bool intra_rbf = true;
    bool dihedrals = true;
    bool secondary_structure = true;
    bool atom_flags = true;
    bool inter_rbf = true;
    bool orientation = true;
    bool relative_position = true;

    /// Throws InvalidParameter unless k >= 1, rbf_min < rbf_max, rbf_count >= 2.
    void validate() const;
};

/// Secondary-structure classes, DSSP letters in index order; index 10 is
/// the "unknown" class used when no annotation is supplied.
inline constexpr std::string_view kSecondaryClasses = "HBEGIPTS=~";
inline constexpr int kSecondaryUnknown = 10;
inline constexpr int kSecondaryChannels = 11;

/// One class index per character. ' ', '-', 'C' and 'L' read as loop '~';
/// '?' reads as unknown. Other characters throw ParseError.
std::vector<int> parse_secondary_structure(std::string_view annotation);

struct DihedralSet {
    std::vector<double> phi, psi, omega;  // radians
    std::vector<bool> phi_defined, psi_defined, omega_defined;
};

/// IUPAC backbone torsions: phi_i = C(i-1) N CA C, psi_i = N CA C N(i+1),
/// omega_i = CA C N(i+1) CA(i+1). Angles are undefined at the termini,
/// across chain breaks (C(i)-N(i+1) > 2 Å), and where an imputed atom is
/// involved; undefined entries are 0 with their mask bit cleared.
DihedralSet dihedral_angles(const ProteinBackbone& backbone);

double dihedral(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d);

std::vector<double> rbf_centers(const FeatureConfig& cfg);
/// exp(-(d - c_m)² / (2σ²)), centers evenly spaced on [rbf_min, rbf_max], σ = spacing.
std::vector<double> rbf_encode(double distance, const FeatureConfig& cfg);

struct FeatureFamily {
    std::string name;
    int offset = 0;
    int width = 0;
};

struct FeatureLayout {
    std::vector<FeatureFamily> node;
    std::vector<FeatureFamily> edge;
    int node_dim = 0;
    int edge_dim = 0;

    static FeatureLayout from_config(const FeatureConfig& cfg);
    const FeatureFamily* find_node(std::string_view name) const;
    const FeatureFamily* find_edge(std::string_view name) const;
};

/**
 * k-NN residue graph over Cα distances.
 *
 * Every node has exactly `k` neighbors (k = min(cfg.k, n - 1)), stored
 * receiver-major: edge e has receiver e / k and neighbor neighbors[e].
 * Edge e carries the features of channel neighbor -> receiver; the reverse
 * channel is a separate edge (when present) with its own features.
 */
struct ResidueGraph {
    int n = 0;
    int k = 0;
    std::vector<int> neighbors;
    RowMatrixXd node_feats;
    RowMatrixXd edge_feats;
    FeatureLayout layout;

    int edge_count() const { return n * k; }
    int receiver(int edge) const { return edge / k; }
    int neighbor(int edge) const { return neighbors[static_cast<std::size_t>(edge)]; }
    /// Index of edge (receiver = neighbor(e), neighbor = receiver(e)), or -1.
    std::vector<int> reverse_edges() const;
    std::vector<int> receivers() const;
};

/// Squared Cα distances are compared on a 1e-9 Å² grid so that ties which
/// rounding would split stay ties under rigid motion.
inline constexpr double kKnnTieQuantum = 1e9;
std::int64_t distance_key(double squared_distance);

/// Neighbor lists only: for each node the min(k, n-1) nearest other nodes by
/// Cα distance, ascending, ties broken by lower residue index.
std::vector<int> knn_neighbors(const ProteinBackbone& backbone, int k);

/// Throws GraphTooSmall for n < 2. `secondary` is empty (all unknown) or one
/// class index per residue.
ResidueGraph build_knn_graph(const ProteinBackbone& backbone, const FeatureConfig& cfg,
                             const std::vector<int>& secondary = {});

}  // namespace riga
