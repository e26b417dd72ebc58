#pragma once

#include <string>

#include "frekoo/trainer.hpp"

namespace frekoo {

// Binary checkpoint: magic, format version, config hash, then named tensors
// (raw doubles). Same-config round trips restore every weight bit-exact.
// The per-epoch log travels separately as the training log file.
void save_checkpoint(const TrainOutcome& outcome, const TrainConfig& config,
                     const std::string& path);

// Rebuilds the outcome from the file; the config must hash to the value the
// checkpoint was written with.
TrainOutcome load_checkpoint(const std::string& path, const TrainConfig& config);

std::uint64_t config_hash(const TrainConfig& config);

}  // namespace frekoo
