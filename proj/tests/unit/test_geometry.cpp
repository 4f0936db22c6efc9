#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "riga/common/error.h"
#include "riga/geometry/features.h"
#include "riga/geometry/frames.h"
#include "riga/geometry/graph_container.h"
#include "riga/structure/pdb.h"
#include "riga/structure/synthetic.h"
#include "riga/structure/transform.h"
#include "support/fixtures.h"

namespace riga {
namespace {

const double kPi = std::acos(-1.0);

ProteinBackbone from_atoms(const std::vector<Vec3>& atoms) {
    ProteinBackbone b;
    b.chain_id = "A";
    const std::size_t n = atoms.size() / 3;
    for (std::size_t i = 0; i < n; ++i) {
        Residue r;
        r.aa = 0;
        r.n = atoms[3 * i];
        r.ca = atoms[3 * i + 1];
        r.c = atoms[3 * i + 2];
        r.o = r.c + Vec3(0.0, 0.0, 1.23);
        r.seq_index = static_cast<int>(i + 1);
        b.residues.push_back(r);
    }
    return b;
}

std::vector<int> brute_force_knn(const ProteinBackbone& b, int k) {
    const int n = static_cast<int>(b.size());
    std::vector<int> out;
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<long long, int>> d;
        for (int j = 0; j < n; ++j)
            if (j != i) d.emplace_back(std::llround((b.residues[i].ca - b.residues[j].ca).squaredNorm() * 1e9), j);
        std::sort(d.begin(), d.end());
        for (int r = 0; r < std::min(k, n - 1); ++r) out.push_back(d[r].second);
    }
    return out;
}

TEST(Frames, OrthonormalRightHanded) {
    CounterRng rng(1);
    ProteinBackbone b = synthetic_backbone(30, rng);
    for (const LocalFrame& f : local_frames(b)) {
        EXPECT_LT((f.basis.transpose() * f.basis - Mat3::Identity()).norm(), 1e-8);
        EXPECT_NEAR(f.basis.determinant(), 1.0, 1e-10);
        EXPECT_NEAR(f.basis.row(2).dot(Vec3(f.basis.row(0).cross(f.basis.row(1)))), 1.0, 1e-12);
    }
}

TEST(Frames, RelativeRotationsAreUnchangedUnderRigidMotion) {
    CounterRng rng(2);
    ProteinBackbone b = synthetic_backbone(12, rng);
    const Mat3 r = random_rotation(rng);
    const auto f0 = local_frames(b);
    const auto f1 = local_frames(apply_rigid_transform(b, r, Vec3(5, 6, 7)));
    for (std::size_t i = 0; i < f0.size(); ++i) {
        // Global axes rotate with the body: basis' = basis Rᵀ.
        EXPECT_LT((f1[i].basis - f0[i].basis * r.transpose()).norm(), 1e-10);
        for (std::size_t j = 0; j < f0.size(); ++j)
            EXPECT_LT((relative_orientation(f1[i], f1[j]) - relative_orientation(f0[i], f0[j])).norm(), 1e-9);
    }
}

TEST(Frames, CollinearResidueThrowsWithIndex) {
    CounterRng rng(3);
    ProteinBackbone b = synthetic_backbone(4, rng);
    Residue& r = b.residues[2];
    r.n = r.ca - (r.c - r.ca);
    try {
        local_frames(b);
        FAIL() << "expected DegenerateFrame";
    } catch (const DegenerateFrame& e) {
        EXPECT_EQ(e.residue(), 2u);
    }
}

TEST(Frames, ImputedAtomsGiveInvalidFrame) {
    CounterRng rng(4);
    ProteinBackbone b = synthetic_backbone(4, rng);
    b.residues[1].missing = kMissingC;
    b.residues[1].c = b.residues[1].ca;
    const auto frames = local_frames(b);
    EXPECT_FALSE(frames[1].valid);
    EXPECT_TRUE(frames[0].valid);
}

TEST(Orientation, IdentityQuarterTurnAndSwap) {
    CounterRng rng(5);
    LocalFrame fi;
    fi.basis = random_rotation(rng);
    EXPECT_LT((relative_orientation(fi, fi) - Eigen::Vector4d(1, 0, 0, 0)).norm(), 1e-12);

    // f_j: f_i rotated 90° about f_i's own z axis.
    LocalFrame fj;
    const Vec3 z = fi.basis.row(2).transpose();
    const Mat3 turn = testing::rodrigues(z, kPi / 2);
    fj.basis = fi.basis * turn.transpose();
    const double h = std::sqrt(2.0) / 2.0;
    EXPECT_LT((relative_orientation(fi, fj) - Eigen::Vector4d(h, 0, 0, h)).norm(), 1e-9);

    const Eigen::Vector4d q = relative_orientation(fi, fj);
    const Eigen::Vector4d qs = relative_orientation(fj, fi);
    EXPECT_NEAR(qs(0), q(0), 1e-12);
    EXPECT_LT((qs.tail<3>() + q.tail<3>()).norm(), 1e-12);
}

TEST(Orientation, MatchesIndependentConversionOnRandomRotations) {
    CounterRng rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const Mat3 r = random_rotation(rng);
        const Eigen::Vector4d q = rotation_to_quaternion(r);
        EXPECT_NEAR(q.norm(), 1.0, 1e-9);
        EXPECT_LT((q - testing::oracle_quaternion(r)).norm(), 1e-9);
    }
}

TEST(Dihedrals, TransPeptideGivesPi) {
    // Planar zig-zag: every torsion is 180°.
    const std::vector<double> phi(6, kPi), psi(6, kPi), omega(6, kPi);
    ProteinBackbone b = from_atoms(testing::oracle_chain(phi, psi, omega));
    DihedralSet d = dihedral_angles(b);
    for (std::size_t i = 0; i + 1 < b.size(); ++i) {
        ASSERT_TRUE(d.omega_defined[i]);
        EXPECT_NEAR(std::abs(d.omega[i]), kPi, 1e-6);
    }
    EXPECT_FALSE(d.phi_defined[0]);
    EXPECT_FALSE(d.psi_defined.back());
    EXPECT_FALSE(d.omega_defined.back());
    EXPECT_EQ(d.phi[0], 0.0);
}

TEST(Dihedrals, IdealHelixAgreesWithIndependentTorsion) {
    const double phi_h = -57.0 * kPi / 180.0, psi_h = -47.0 * kPi / 180.0;
    const int n = 12;
    const std::vector<double> phi(n, phi_h), psi(n, psi_h), omega(n, kPi);
    const auto atoms = testing::oracle_chain(phi, psi, omega);
    ProteinBackbone b = from_atoms(atoms);
    DihedralSet d = dihedral_angles(b);
    const double tol = 2.0 * kPi / 180.0;
    for (int i = 1; i + 1 < n; ++i) {
        const double phi_ref = testing::oracle_dihedral(atoms[3 * i - 1], atoms[3 * i], atoms[3 * i + 1], atoms[3 * i + 2]);
        const double psi_ref = testing::oracle_dihedral(atoms[3 * i], atoms[3 * i + 1], atoms[3 * i + 2], atoms[3 * i + 3]);
        EXPECT_NEAR(phi_ref, phi_h, tol);
        EXPECT_NEAR(psi_ref, psi_h, tol);
        EXPECT_NEAR(d.phi[i], phi_ref, 1e-9);
        EXPECT_NEAR(d.psi[i], psi_ref, 1e-9);
    }
}

TEST(Dihedrals, LibraryBuilderReproducesRequestedTorsions) {
    CounterRng rng(7);
    const int n = 10;
    std::vector<double> phi(n), psi(n), omega(n, kPi);
    for (int i = 0; i < n; ++i) {
        phi[i] = rng.uniform(-kPi, kPi);
        psi[i] = rng.uniform(-kPi, kPi);
    }
    ProteinBackbone b = build_backbone_from_torsions(phi, psi, omega, std::vector<AminoAcid>(n, 0));
    DihedralSet d = dihedral_angles(b);
    for (int i = 1; i + 1 < n; ++i) {
        EXPECT_NEAR(std::remainder(d.phi[i] - phi[i], 2 * kPi), 0.0, 1e-8);
        EXPECT_NEAR(std::remainder(d.psi[i] - psi[i], 2 * kPi), 0.0, 1e-8);
    }
}

TEST(Dihedrals, ChainBreakAndImputedAtomsAreMasked) {
    CounterRng rng(8);
    ProteinBackbone b = synthetic_backbone(6, rng);
    for (std::size_t i = 3; i < b.size(); ++i)
        for (int a = 0; a < 4; ++a) b.residues[i].atom(static_cast<BackboneAtom>(a)) += Vec3(10, 0, 0);
    b.residues[1].missing = kMissingO;
    DihedralSet d = dihedral_angles(b);
    EXPECT_FALSE(d.psi_defined[2]);
    EXPECT_FALSE(d.omega_defined[2]);
    EXPECT_FALSE(d.phi_defined[3]);
    EXPECT_TRUE(d.phi_defined[2]);
    EXPECT_TRUE(d.psi_defined[1]);  // O takes no part in torsions
}

TEST(Rbf, KernelValues) {
    FeatureConfig cfg;
    const auto centers = rbf_centers(cfg);
    ASSERT_EQ(centers.size(), 16u);
    const double sigma = centers[1] - centers[0];
    EXPECT_NEAR(sigma, 20.0 / 15.0, 1e-12);
    EXPECT_DOUBLE_EQ(rbf_encode(centers[5], cfg)[5], 1.0);
    EXPECT_NEAR(rbf_encode(centers[5] + sigma, cfg)[5], std::exp(-0.5), 1e-12);
    EXPECT_NEAR(std::exp(-0.5), 0.60653, 1e-5);
    const auto tail = rbf_encode(cfg.rbf_max + 10 * sigma, cfg);
    for (std::size_t m = 0; m + 1 < tail.size(); ++m) EXPECT_LT(tail[m], 1e-8);
    EXPECT_NEAR(tail.back(), std::exp(-50.0), 1e-30);
}

TEST(FeatureConfig, Validation) {
    FeatureConfig cfg;
    EXPECT_NO_THROW(cfg.validate());
    cfg.k = 0;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = {};
    cfg.rbf_min = 20;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
    cfg = {};
    cfg.rbf_count = 1;
    EXPECT_THROW(cfg.validate(), InvalidParameter);
}

TEST(SecondaryStructure, Parsing) {
    const auto cls = parse_secondary_structure("HBEGIPTS=~ -CL?");
    const std::vector<int> want{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 9, 9, 9, 9, kSecondaryUnknown};
    EXPECT_EQ(cls, want);
    EXPECT_THROW(parse_secondary_structure("HZ"), ParseError);
}

TEST(Knn, ThreeResiduesFormCompleteGraph) {
    CounterRng rng(9);
    ProteinBackbone b = synthetic_backbone(3, rng);
    FeatureConfig cfg;
    cfg.k = 2;
    ResidueGraph g = build_knn_graph(b, cfg);
    ASSERT_EQ(g.k, 2);
    for (int i = 0; i < 3; ++i) {
        std::vector<int> nb{g.neighbors[2 * i], g.neighbors[2 * i + 1]};
        std::sort(nb.begin(), nb.end());
        std::vector<int> want;
        for (int j = 0; j < 3; ++j)
            if (j != i) want.push_back(j);
        EXPECT_EQ(nb, want);
    }
    cfg.k = 48;
    EXPECT_EQ(build_knn_graph(b, cfg).k, 2);
    for (int r : build_knn_graph(b, cfg).reverse_edges()) EXPECT_GE(r, 0);
}

TEST(Knn, TiesResolveToLowerIndex) {
    // Residue 0 sits at the origin with residues 1..4 on a circle of radius 4.
    ProteinBackbone b;
    const Vec3 pts[5] = {Vec3(0, 0, 0), Vec3(0, 4, 0), Vec3(4, 0, 0), Vec3(0, -4, 0), Vec3(-4, 0, 0)};
    for (int i = 0; i < 5; ++i) {
        Residue r;
        r.ca = pts[i];
        b.residues.push_back(r);
    }
    const auto nb = knn_neighbors(b, 2);
    EXPECT_EQ(nb[0], 1);
    EXPECT_EQ(nb[1], 2);
    EXPECT_EQ(nb, brute_force_knn(b, 2));
}

TEST(Knn, MatchesBruteForceOnRandomBackbones) {
    CounterRng rng(10);
    for (int trial = 0; trial < 20; ++trial) {
        ProteinBackbone b = synthetic_backbone(static_cast<int>(10 + rng.below(60)), rng);
        for (int k : {1, 5, 48}) EXPECT_EQ(knn_neighbors(b, k), brute_force_knn(b, k));
    }
}

TEST(Knn, EquidistantNeighborsKeepOrderUnderRigidMotion) {
    // Ideal geometry makes CA(i-1) and CA(i+1) equidistant from CA(i).
    CounterRng rng(12);
    const ProteinBackbone b = synthetic_backbone(40, rng);
    const auto base = knn_neighbors(b, 8);
    for (int t = 0; t < 50; ++t) {
        const ProteinBackbone moved = apply_rigid_transform(b, random_rotation(rng), Vec3(30, -20, 10) * rng.uniform());
        EXPECT_EQ(knn_neighbors(moved, 8), base);
    }
}

TEST(Knn, TooSmall) {
    CounterRng rng(11);
    EXPECT_THROW(build_knn_graph(synthetic_backbone(1, rng), FeatureConfig{}), GraphTooSmall);
}

TEST(Features, LayoutWidthsAndFamilies) {
    FeatureLayout layout = FeatureLayout::from_config(FeatureConfig{});
    EXPECT_EQ(layout.node_dim, 119);
    EXPECT_EQ(layout.edge_dim, 325);
    ASSERT_NE(layout.find_edge("inter_rbf"), nullptr);
    EXPECT_EQ(layout.find_edge("inter_rbf")->width, 16 * 16);
    EXPECT_EQ(layout.find_edge("orientation")->width, 4);
    EXPECT_EQ(layout.find_edge("relative_position")->width, 65);
    EXPECT_EQ(layout.find_node("secondary_structure")->width, kSecondaryChannels);
    int offset = 0;
    for (const auto& f : layout.edge) {
        EXPECT_EQ(f.offset, offset);
        offset += f.width;
    }
    EXPECT_EQ(offset, layout.edge_dim);
    FeatureConfig off;
    off.orientation = false;
    off.secondary_structure = false;
    FeatureLayout small = FeatureLayout::from_config(off);
    EXPECT_EQ(small.edge_dim, 321);
    EXPECT_EQ(small.node_dim, 108);
    EXPECT_EQ(small.find_edge("orientation"), nullptr);
}

TEST(Features, EdgeChannelsAreDistinctAndOrientationMatchesFrames) {
    CounterRng rng(12);
    ProteinBackbone b = synthetic_backbone(20, rng);
    FeatureConfig cfg;
    cfg.k = 8;
    ResidueGraph g = build_knn_graph(b, cfg);
    const auto frames = local_frames(b);
    const auto rev = g.reverse_edges();
    const auto* ori = g.layout.find_edge("orientation");
    const auto* rel = g.layout.find_edge("relative_position");
    int distinct = 0;
    for (int e = 0; e < g.edge_count(); ++e) {
        const int i = g.receiver(e), j = g.neighbor(e);
        const Eigen::Vector4d q = g.edge_feats.row(e).segment(ori->offset, 4).transpose();
        EXPECT_LT((q - relative_orientation(frames[i], frames[j])).norm(), 1e-12);
        const int offset = std::clamp(j - i, -32, 32) + 32;
        EXPECT_EQ(g.edge_feats(e, rel->offset + offset), 1.0);
        EXPECT_EQ(g.edge_feats.row(e).segment(rel->offset, rel->width).sum(), 1.0);
        if (rev[e] >= 0 && (g.edge_feats.row(e) - g.edge_feats.row(rev[e])).norm() > 1e-6) ++distinct;
    }
    EXPECT_GT(distinct, 0);
}

TEST(Features, InterRbfUsesAllAtomPairs) {
    CounterRng rng(13);
    ProteinBackbone b = synthetic_backbone(6, rng);
    FeatureConfig cfg;
    cfg.k = 3;
    ResidueGraph g = build_knn_graph(b, cfg);
    const auto* fam = g.layout.find_edge("inter_rbf");
    const int e = 4;
    const Residue& ri = b.residues[g.receiver(e)];
    const Residue& rj = b.residues[g.neighbor(e)];
    for (int a = 0; a < 4; ++a)
        for (int c = 0; c < 4; ++c) {
            const double d = (ri.atom(static_cast<BackboneAtom>(a)) - rj.atom(static_cast<BackboneAtom>(c))).norm();
            const auto want = rbf_encode(d, cfg);
            for (int m = 0; m < cfg.rbf_count; ++m)
                EXPECT_NEAR(g.edge_feats(e, fam->offset + (a * 4 + c) * cfg.rbf_count + m), want[m], 1e-12);
        }
}

TEST(Features, ImputedAtomFeaturesAreZeroedAndFlagged) {
    CounterRng rng(14);
    ProteinBackbone b = synthetic_backbone(8, rng);
    b.residues[3].missing = kMissingO;
    b.residues[3].o = b.residues[3].ca;
    FeatureConfig cfg;
    cfg.k = 4;
    ResidueGraph g = build_knn_graph(b, cfg);
    const auto* flags = g.layout.find_node("atom_flags");
    ASSERT_NE(flags, nullptr);
    EXPECT_EQ(g.node_feats.row(3).segment(flags->offset, flags->width).sum(), 1.0);
    EXPECT_EQ(g.node_feats.row(2).segment(flags->offset, flags->width).sum(), 0.0);
    const auto* inter = g.layout.find_edge("inter_rbf");
    for (int e = 0; e < g.edge_count(); ++e) {
        if (g.receiver(e) != 3) continue;
        // Receiver atom index 3 (O) rows are all zero.
        EXPECT_EQ(g.edge_feats.row(e).segment(inter->offset + 3 * 4 * cfg.rbf_count, 4 * cfg.rbf_count).norm(), 0.0);
    }
}

TEST(Features, TranslationInvarianceIsTight) {
    CounterRng rng(15);
    ProteinBackbone b = synthetic_backbone(25, rng);
    FeatureConfig cfg;
    ResidueGraph g0 = build_knn_graph(b, cfg);
    ResidueGraph g1 = build_knn_graph(apply_rigid_transform(b, Mat3::Identity(), Vec3(3.0, -2.0, 7.0)), cfg);
    EXPECT_EQ(g0.neighbors, g1.neighbors);
    EXPECT_LT((g0.node_feats - g1.node_feats).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((g0.edge_feats - g1.edge_feats).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Features, AtomRecordOrderDoesNotMatter) {
    std::string forward = testing::ala_gly_pdb();
    // Same records with the atoms of each residue in reverse order.
    std::vector<std::string> lines;
    std::size_t pos = 0;
    while (pos < forward.size()) {
        const std::size_t end = forward.find('\n', pos);
        lines.push_back(forward.substr(pos, end - pos + 1));
        pos = end + 1;
    }
    std::string shuffled;
    for (int i = 4; i >= 0; --i) shuffled += lines[static_cast<std::size_t>(i)];
    for (int i = 8; i >= 5; --i) shuffled += lines[static_cast<std::size_t>(i)];
    FeatureConfig cfg;
    ResidueGraph g0 = build_knn_graph(parse_pdb(forward, "A"), cfg);
    ResidueGraph g1 = build_knn_graph(parse_pdb(shuffled, "A"), cfg);
    EXPECT_EQ(g0.node_feats, g1.node_feats);
    EXPECT_EQ(g0.edge_feats, g1.edge_feats);
}

TEST(GraphContainer, RoundTripKeepsLayoutAndFloat32Values) {
    CounterRng rng(16);
    FeaturizedGraph fg;
    fg.graph = build_knn_graph(synthetic_backbone(10, rng), FeatureConfig{});
    fg.config = FeatureConfig{};
    fg.chain_id = "A";
    fg.sequence = "ACDEFGHIKL";
    Blob blob = graph_to_blob(fg);
    EXPECT_EQ(blob.kind, "FEAT");
    EXPECT_EQ(blob.header["n"], 10);
    EXPECT_EQ(blob.header["node_dim"], 119);
    FeaturizedGraph back = graph_from_blob(decode_blob(encode_blob(blob), "FEAT"));
    EXPECT_EQ(back.graph.neighbors, fg.graph.neighbors);
    EXPECT_EQ(back.sequence, fg.sequence);
    EXPECT_EQ(back.graph.layout.edge_dim, 325);
    EXPECT_LT((back.graph.edge_feats - fg.graph.edge_feats).cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_EQ(back.graph.edge_feats, fg.graph.edge_feats.cast<float>().cast<double>());
}

}  // namespace
}  // namespace riga
