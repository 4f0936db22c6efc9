#pragma once

#include <vector>

#include <Eigen/Core>

#include "riga/structure/backbone.h"
#include "riga/structure/transform.h"

namespace riga {

/// Per-residue orthonormal frame. Rows of `basis` are the local x, y, z
/// axes expressed in the global frame. Residues whose N or C was imputed
/// get `valid = false` and an identity basis; nothing may read it.
struct LocalFrame {
    Vec3 origin = Vec3::Zero();
    Mat3 basis = Mat3::Identity();
    bool valid = true;
};

/// Gram-Schmidt on (Cα→C, Cα→N): x = Cα→C, y = Cα→N minus its x part,
/// z = x × y. Throws DegenerateFrame when N, Cα and C are collinear.
LocalFrame local_frame(const Residue& residue, std::size_t index = 0);
std::vector<LocalFrame> local_frames(const ProteinBackbone& backbone);

/// Unit quaternion (w, x, y, z) of the rotation taking frame j's axes into
/// frame i's coordinates, basis_i · basis_jᵀ. Sign fixed so that w >= 0.
Eigen::Vector4d relative_orientation(const LocalFrame& fi, const LocalFrame& fj);

Eigen::Vector4d rotation_to_quaternion(const Mat3& rotation);

}  // namespace riga
