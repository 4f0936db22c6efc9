#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "riga/common/rng.h"
#include "riga/structure/backbone.h"

namespace riga::testing {

/// One fixed-width ATOM record (PDB v3.3 columns).
inline std::string atom_line(int serial, const std::string& atom, const std::string& res, char chain, int res_seq,
                             double x, double y, double z, char altloc = ' ', char icode = ' ',
                             const char* record = "ATOM  ") {
    char buf[100];
    std::snprintf(buf, sizeof(buf), "%-6s%5d %-4s%c%3s %c%4d%c   %8.3f%8.3f%8.3f%6.2f%6.2f          %2s",
                  record, serial, atom.size() < 4 ? (" " + atom).c_str() : atom.c_str(), altloc, res.c_str(), chain,
                  res_seq, icode, x, y, z, 1.0, 0.0, atom.substr(0, 1).c_str());
    return std::string(buf) + "\n";
}

/// ALA-GLY dipeptide with all eight backbone atoms on chain A.
inline std::string ala_gly_pdb() {
    std::string s;
    s += atom_line(1, "N", "ALA", 'A', 1, -0.677, -1.230, -0.491);
    s += atom_line(2, "CA", "ALA", 'A', 1, -0.001, 0.064, -0.491);
    s += atom_line(3, "C", "ALA", 'A', 1, 1.499, -0.110, -0.491);
    s += atom_line(4, "O", "ALA", 'A', 1, 2.030, -1.227, -0.502);
    s += atom_line(5, "CB", "ALA", 'A', 1, -0.509, 0.856, 0.727);
    s += atom_line(6, "N", "GLY", 'A', 2, 2.250, 0.983, -0.481);
    s += atom_line(7, "CA", "GLY", 'A', 2, 3.703, 0.953, -0.475);
    s += atom_line(8, "C", "GLY", 'A', 2, 4.218, 2.384, -0.466);
    s += atom_line(9, "O", "GLY", 'A', 2, 3.432, 3.328, -0.466);
    s += "TER\nEND\n";
    return s;
}

/// Independent torsion oracle: angle between the two plane normals, signed
/// by the orientation of the middle bond.
inline double oracle_dihedral(const Vec3& p0, const Vec3& p1, const Vec3& p2, const Vec3& p3) {
    const Vec3 n1 = (p1 - p0).cross(p2 - p1).normalized();
    const Vec3 n2 = (p2 - p1).cross(p3 - p2).normalized();
    const double c = std::max(-1.0, std::min(1.0, n1.dot(n2)));
    const double angle = std::acos(c);
    return n1.cross(n2).dot(p2 - p1) < 0.0 ? -angle : angle;
}

/// Independent rotation -> quaternion (w, x, y, z) via the largest-diagonal
/// branch, w >= 0.
inline Eigen::Vector4d oracle_quaternion(const Eigen::Matrix3d& m) {
    Eigen::Vector4d q;
    const double tr = m.trace();
    if (tr > 0) {
        const double s = std::sqrt(tr + 1.0) * 2;
        q << 0.25 * s, (m(2, 1) - m(1, 2)) / s, (m(0, 2) - m(2, 0)) / s, (m(1, 0) - m(0, 1)) / s;
    } else if (m(0, 0) > m(1, 1) && m(0, 0) > m(2, 2)) {
        const double s = std::sqrt(1.0 + m(0, 0) - m(1, 1) - m(2, 2)) * 2;
        q << (m(2, 1) - m(1, 2)) / s, 0.25 * s, (m(0, 1) + m(1, 0)) / s, (m(0, 2) + m(2, 0)) / s;
    } else if (m(1, 1) > m(2, 2)) {
        const double s = std::sqrt(1.0 + m(1, 1) - m(0, 0) - m(2, 2)) * 2;
        q << (m(0, 2) - m(2, 0)) / s, (m(0, 1) + m(1, 0)) / s, 0.25 * s, (m(1, 2) + m(2, 1)) / s;
    } else {
        const double s = std::sqrt(1.0 + m(2, 2) - m(0, 0) - m(1, 1)) * 2;
        q << (m(1, 0) - m(0, 1)) / s, (m(0, 2) + m(2, 0)) / s, (m(1, 2) + m(2, 1)) / s, 0.25 * s;
    }
    q.normalize();
    if (q(0) < 0) q = -q;
    return q;
}

/// Rodrigues rotation, independent of the library's helpers.
inline Eigen::Matrix3d rodrigues(Vec3 axis, double angle) {
    axis.normalize();
    Eigen::Matrix3d k;
    k << 0, -axis.z(), axis.y(), axis.z(), 0, -axis.x(), -axis.y(), axis.x(), 0;
    return Eigen::Matrix3d::Identity() + std::sin(angle) * k + (1 - std::cos(angle)) * k * k;
}

/// Chain built by rotating bond vectors with Rodrigues rotations (not the
/// library's NeRF), given torsions in radians. Returns N, CA, C per residue.
inline std::vector<Vec3> oracle_chain(const std::vector<double>& phi, const std::vector<double>& psi,
                                      const std::vector<double>& omega) {
    const double pi = std::acos(-1.0);
    const double bond[3] = {1.458, 1.525, 1.329};           // N-CA, CA-C, C-N
    const double angle[3] = {111.2, 116.2, 121.7};          // at CA, at C, at N
    std::vector<Vec3> atoms{Vec3(0, 0, 0), Vec3(bond[0], 0, 0)};
    // Third atom in the xy plane.
    const double a0 = (180.0 - angle[0]) * pi / 180.0;
    atoms.push_back(atoms[1] + bond[1] * Vec3(std::cos(a0), std::sin(a0), 0));
    const std::size_t n = phi.size();
    for (std::size_t idx = 3; idx < 3 * n; ++idx) {
        const std::size_t res = idx / 3, kind = idx % 3;  // kind 0: N, 1: CA, 2: C
        double torsion;
        if (kind == 0) torsion = psi[res - 1];
        else if (kind == 1) torsion = omega[res - 1];
        else torsion = phi[res];
        const double bl = bond[(kind + 2) % 3];
        const double ang = angle[(kind + 2) % 3] * pi / 180.0;
        const Vec3& a = atoms[idx - 3];
        const Vec3& b = atoms[idx - 2];
        const Vec3& c = atoms[idx - 1];
        const Vec3 bc = (c - b).normalized();
        const Vec3 normal = (b - a).cross(bc).normalized();
        // Start along bc, bend by (pi - angle) about the plane normal, then twist by the torsion about bc.
        Vec3 d = rodrigues(normal, pi - ang) * bc;
        d = rodrigues(bc, torsion) * d;
        atoms.push_back(c + bl * d);
    }
    return atoms;
}


}  // namespace riga::testing
