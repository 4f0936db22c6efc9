#include "riga/geometry/frames.h"

#include <cmath>

#include <Eigen/Geometry>

#include "riga/common/error.h"

namespace riga {

LocalFrame local_frame(const Residue& residue, std::size_t index) {
    LocalFrame frame;
    frame.origin = residue.ca;
    if (!residue.has_atom(BackboneAtom::N) || !residue.has_atom(BackboneAtom::C)) {
        frame.valid = false;
        return frame;
    }
    const Vec3 to_c = residue.c - residue.ca;
    const Vec3 to_n = residue.n - residue.ca;
    const double len_c = to_c.norm();
    const double len_n = to_n.norm();
    if (len_c < 1e-9 || len_n < 1e-9)
        throw DegenerateFrame("residue " + std::to_string(index) + ": coincident backbone atoms", index);
    const Vec3 x = to_c / len_c;
    const Vec3 y_raw = to_n - x.dot(to_n) * x;
    if (y_raw.norm() < 1e-9 * len_n)
        throw DegenerateFrame("residue " + std::to_string(index) + ": N, CA and C are collinear", index);
    const Vec3 y = y_raw.normalized();
    const Vec3 z = x.cross(y);
    frame.basis.row(0) = x;
    frame.basis.row(1) = y;
    frame.basis.row(2) = z;
    return frame;
}

std::vector<LocalFrame> local_frames(const ProteinBackbone& backbone) {
    if (backbone.empty()) throw InvalidParameter("local_frames requires a non-empty backbone");
    std::vector<LocalFrame> frames;
    frames.reserve(backbone.size());
    for (std::size_t i = 0; i < backbone.size(); ++i) frames.push_back(local_frame(backbone.residues[i], i));
    return frames;
}

Eigen::Vector4d rotation_to_quaternion(const Mat3& rotation) {
    Eigen::Quaterniond q(rotation);
    q.normalize();
    Eigen::Vector4d out(q.w(), q.x(), q.y(), q.z());
    if (out[0] < 0.0) {
        out = -out;
    } else if (out[0] == 0.0) {
        for (int k = 1; k < 4; ++k) {
            if (out[k] != 0.0) {
                if (out[k] < 0.0) out = -out;
                break;
            }
        }
    }
    return out;
}

Eigen::Vector4d relative_orientation(const LocalFrame& fi, const LocalFrame& fj) {
    return rotation_to_quaternion(fi.basis * fj.basis.transpose());
}

}  // namespace riga
