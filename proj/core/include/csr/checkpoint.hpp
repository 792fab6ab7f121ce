#pragma once

#include <string>

#include "csr/model.hpp"

namespace csr {

// Weights checkpoint: magic "CSRW", u32-LE version (1), u32-LE layer count,
// then one record per layer: u32 kind tag, kind-specific u32 dims, and for
// conv layers the kernel ([ky][kx][in][out]) and bias as float32-LE.
// Self-describing: loading reconstructs the ModelSpec.
struct Checkpoint {
  ModelSpec spec;
  Weights weights;
};

void save_checkpoint(const ModelSpec& spec, const Weights& weights,
                     const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace csr
