#pragma once

#include <string>

#include "riga/common/blob.h"
#include "riga/common/rng.h"
#include "riga/nn/layers.h"

namespace riga::nn {

/**
 * Checkpoint blob (kind "CKPT"). The header carries "params" (name and
 * shape per tensor, in store order), "dtype", "rng" {algorithm, seed,
 * counter} and whatever keys `extra` adds (model config, training step).
 * One block per parameter, named after it. A checkpoint written in either
 * precision loads into a store of either precision.
 */
template <typename T>
Blob params_to_blob(const ParamStore<T>& store, const CounterRng& rng, const nlohmann::json& extra,
                    bool float64 = true);

/// Copies every parameter of `store` from the blob. A missing name or a
/// shape disagreement throws ShapeError.
template <typename T>
void load_params(ParamStore<T>& store, const Blob& blob);

CounterRng rng_from_checkpoint(const Blob& blob);

}  // namespace riga::nn
