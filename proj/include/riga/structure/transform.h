#pragma once

#include <cstdint>

#include <Eigen/Core>

#include "riga/common/rng.h"
#include "riga/structure/backbone.h"

namespace riga {

using Mat3 = Eigen::Matrix3d;

/// x -> R x + t for every atom. Throws InvalidRotation unless RᵀR = I and
/// det R = +1 within 1e-10.
ProteinBackbone apply_rigid_transform(const ProteinBackbone& backbone, const Mat3& rotation, const Vec3& translation);

/// Adds independent N(0, sigma²) noise to every coordinate component. Draw
/// order is residue-major, atoms N, CA, C, O, then x, y, z. Imputed atoms
/// follow their (noised) Cα. Throws InvalidParameter for sigma < 0.
ProteinBackbone inject_backbone_noise(const ProteinBackbone& backbone, double sigma, std::uint64_t seed);

/// Uniformly distributed rotation (normalized Gaussian quaternion).
Mat3 random_rotation(CounterRng& rng);
Mat3 axis_angle_rotation(const Vec3& axis, double radians);

void validate_rotation(const Mat3& rotation);

}  // namespace riga
