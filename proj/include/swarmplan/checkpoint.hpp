#pragma once

#include "swarmplan/gnn.hpp"

#include <filesystem>
#include <stdexcept>
#include <string>

namespace swarmplan {

inline constexpr const char* kCheckpointFormat = "swarmplan-ckpt-1";

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// File layout: one line of JSON (format, config, tensors with name/shape/offset,
// payload_bytes) terminated by '\n', then the raw little-endian float64 payload.
// Offsets are byte offsets into the payload.

void save_checkpoint(const GnnParams& params, const std::filesystem::path& path);

GnnParams load_checkpoint(const std::filesystem::path& path);

/// Loads and rejects the file unless its config equals `expected`.
GnnParams load_checkpoint(const std::filesystem::path& path, const GnnConfig& expected);

}  // namespace swarmplan
