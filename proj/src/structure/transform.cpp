#include "riga/structure/transform.h"

#include <cmath>

#include <Eigen/Geometry>

#include "riga/common/error.h"

namespace riga {

void validate_rotation(const Mat3& rotation) {
    if (!rotation.allFinite()) throw InvalidRotation("rotation has non-finite entries");
    const double ortho = (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-10) throw InvalidRotation("rotation is not orthonormal (deviation " + std::to_string(ortho) + ")");
    if (std::abs(rotation.determinant() - 1.0) > 1e-10) throw InvalidRotation("rotation has determinant != +1");
}

ProteinBackbone apply_rigid_transform(const ProteinBackbone& backbone, const Mat3& rotation, const Vec3& translation) {
    validate_rotation(rotation);
    ProteinBackbone out = backbone;
    for (auto& r : out.residues) {
        r.n = rotation * r.n + translation;
        r.ca = rotation * r.ca + translation;
        r.c = rotation * r.c + translation;
        r.o = rotation * r.o + translation;
    }
    return out;
}

ProteinBackbone inject_backbone_noise(const ProteinBackbone& backbone, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0.0)) throw InvalidParameter("noise sigma must be >= 0");
    ProteinBackbone out = backbone;
    if (sigma == 0.0) return out;
    CounterRng rng(seed);
    for (auto& r : out.residues) {
        Vec3 delta[4];
        for (auto& d : delta)
            for (int k = 0; k < 3; ++k) d[k] = sigma * rng.normal();
        r.ca += delta[1];
        r.n = (r.missing & kMissingN) ? r.ca : Vec3(r.n + delta[0]);
        r.c = (r.missing & kMissingC) ? r.ca : Vec3(r.c + delta[2]);
        r.o = (r.missing & kMissingO) ? r.ca : Vec3(r.o + delta[3]);
    }
    return out;
}

Mat3 random_rotation(CounterRng& rng) {
    Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    return q.toRotationMatrix();
}

Mat3 axis_angle_rotation(const Vec3& axis, double radians) {
    return Eigen::AngleAxisd(radians, axis.normalized()).toRotationMatrix();
}

}  // namespace riga
