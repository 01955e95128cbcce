#pragma once

#include <filesystem>

#include "beambind/featnet.hpp"
#include "beambind/prototypes.hpp"

namespace bb {

// Versioned little-endian binary container holding the network parameters
// and the prototype bank. Writing is deterministic: identical state gives
// byte-identical files.
struct Checkpoint {
  NetParams params;
  PrototypeBank bank;
};

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace bb
