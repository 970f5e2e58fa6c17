#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cvtn/model.hpp"

namespace cvtn {

/// SHA-256 of a byte buffer as lowercase hex.
std::string sha256_hex(const std::vector<uint8_t>& bytes);

/// Deterministic byte encoding of a named parameter group (names, shapes,
/// raw values), used for checkpoints and freezing audits.
std::vector<uint8_t> serialize_group(const std::vector<std::pair<std::string, Tensor*>>& group);

/// Versioned binary checkpoint: magic bytes, config block, named
/// parameter blobs with shapes.
void save_checkpoint(const std::string& path, CvtnModel& model);
CvtnModel load_checkpoint(const std::string& path);

/// Plain-text manifest of parameter names/shapes/hashes, one line each,
/// for freezing audits.
void write_manifest(const std::string& path, CvtnModel& model);

} // namespace cvtn
