#include "riga/structure/synthetic.h"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "riga/common/error.h"

namespace riga {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// Engh & Huber style ideal backbone geometry (Å, degrees).
constexpr double kBondNCa = 1.458;
constexpr double kBondCaC = 1.525;
constexpr double kBondCN = 1.329;
constexpr double kBondCO = 1.231;
constexpr double kAngleNCaC = 111.2;
constexpr double kAngleCaCN = 116.2;
constexpr double kAngleCNCa = 121.7;
constexpr double kAngleCaCO = 120.5;

Vec3 place(const Vec3& a, const Vec3& b, const Vec3& c, double bond, double angle_deg, double torsion) {
    const Vec3 bc = (c - b).normalized();
    const Vec3 n = (b - a).cross(bc).normalized();
    const Vec3 m = n.cross(bc);
    const double theta = angle_deg * kDeg;
    const Vec3 local(-bond * std::cos(theta), bond * std::sin(theta) * std::cos(torsion),
                     bond * std::sin(theta) * std::sin(torsion));
    return c + bc * local.x() + m * local.y() + n * local.z();
}

}  // namespace

ProteinBackbone build_backbone_from_torsions(const std::vector<double>& phi, const std::vector<double>& psi,
                                             const std::vector<double>& omega, const std::vector<AminoAcid>& sequence) {
    const std::size_t n = sequence.size();
    if (n == 0 || phi.size() != n || psi.size() != n || omega.size() != n)
        throw InvalidParameter("torsion arrays must match the sequence length");
    ProteinBackbone b;
    b.chain_id = "A";
    b.residues.resize(n);
    auto& r0 = b.residues[0];
    r0.n = Vec3(0, 0, 0);
    r0.ca = Vec3(kBondNCa, 0, 0);
    const double t = (180.0 - kAngleNCaC) * kDeg;
    r0.c = r0.ca + kBondCaC * Vec3(std::cos(t), std::sin(t), 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& r = b.residues[i];
        r.aa = sequence[i];
        r.seq_index = static_cast<int>(i) + 1;
        if (i > 0) {
            const auto& p = b.residues[i - 1];
            r.n = place(p.n, p.ca, p.c, kBondCN, kAngleCaCN, psi[i - 1]);
            r.ca = place(p.ca, p.c, r.n, kBondNCa, kAngleCNCa, omega[i - 1]);
            r.c = place(p.c, r.n, r.ca, kBondCaC, kAngleNCaC, phi[i]);
        }
        // Carbonyl O sits in the peptide plane, trans to the next N.
        r.o = place(r.n, r.ca, r.c, kBondCO, kAngleCaCO, psi[i] + std::numbers::pi);
    }
    return b;
}

ProteinBackbone synthetic_backbone(int length, CounterRng& rng, const SyntheticOptions& options) {
    if (length < 1) throw InvalidParameter("synthetic backbone length must be >= 1");
    std::vector<double> phi(length), psi(length), omega(length, std::numbers::pi);
    std::vector<AminoAcid> seq(length);
    int i = 0;
    while (i < length) {
        const bool helix = rng.uniform() < options.helix_fraction;
        const int span = options.min_segment +
                         static_cast<int>(rng.below(static_cast<std::uint64_t>(options.max_segment - options.min_segment + 1)));
        for (int s = 0; s < span && i < length; ++s, ++i) {
            const double base_phi = helix ? -57.0 : -120.0;
            const double base_psi = helix ? -47.0 : 130.0;
            phi[i] = (base_phi + options.torsion_jitter_deg * rng.normal()) * kDeg;
            psi[i] = (base_psi + options.torsion_jitter_deg * rng.normal()) * kDeg;
        }
    }
    for (auto& aa : seq) aa = static_cast<AminoAcid>(rng.below(kNumAminoAcids));
    return build_backbone_from_torsions(phi, psi, omega, seq);
}

std::vector<ProteinBackbone> synthetic_corpus(int count, int min_length, int max_length, std::uint64_t seed) {
    if (count < 1 || min_length < 1 || max_length < min_length)
        throw InvalidParameter("invalid synthetic corpus dimensions");
    CounterRng rng(seed);
    std::vector<ProteinBackbone> corpus;
    for (int c = 0; c < count; ++c) {
        const int len = min_length + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_length - min_length + 1)));
        CounterRng protein_rng = rng.fork(static_cast<std::uint64_t>(c));
        auto b = synthetic_backbone(len, protein_rng);
        b.chain_id = "A";
        corpus.push_back(std::move(b));
    }
    return corpus;
}

}  // namespace riga
