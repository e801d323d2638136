#pragma once

#include <string>
#include <vector>

#include "normest/adam.hpp"
#include "normest/common.hpp"
#include "normest/geometry.hpp"
#include "normest/hsurf.hpp"
#include "normest/train.hpp"

namespace normest {

// Text point formats: one record per line, three whitespace-separated decimal
// reals. Writers emit 17 significant digits so values round-trip bit-exactly.

PointCloud load_xyz(const std::string& path);
void save_xyz(const std::string& path, const PointCloud& cloud);

// Attaches ground-truth normals to an already loaded cloud. Line count must
// match the point count; rows are renormalized when within 1e-3 of unit
// length and rejected otherwise.
void load_normals(const std::string& path, PointCloud& cloud);
void save_normals(const std::string& path, const std::vector<Vec3>& normals);

// Self-describing training snapshot: a text header holding the configs and
// the tensor directory, followed by a little-endian 64-bit float payload.
struct Checkpoint {
  ModelConfig model;
  TrainConfig train;
  HSurfParams params;
  AdamState opt;
  bool has_opt = false;
  long long step = 0;
  std::string rng_state;
};

void save_checkpoint(const std::string& path, Checkpoint& checkpoint);

// Rejects unknown versions, directory/config inconsistencies, truncated or
// oversized payloads. The returned params match init_params structure for the
// stored ModelConfig with the stored values.
Checkpoint load_checkpoint(const std::string& path);

}  // namespace normest
