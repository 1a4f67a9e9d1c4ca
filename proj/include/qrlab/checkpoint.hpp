#pragma once

#include <cstdint>
#include <string>

#include "qrlab/net.hpp"

namespace qrlab::nn {

struct CheckpointMeta {
    std::uint64_t train_seed = 0;
    std::int32_t best_epoch = 0;
    double best_val_accuracy = 0.0;
    std::string dataset_id;
};

/// Versioned little-endian binary checkpoint ("QRLB", v1).  Shadow parameters
/// are stored as raw IEEE-754 doubles, so save/load round-trips bit-exactly.
void save_checkpoint(const MlpNetwork& net, const CheckpointMeta& meta,
                     const std::string& path);

std::pair<MlpNetwork, CheckpointMeta> load_checkpoint(const std::string& path);

}  // namespace qrlab::nn
