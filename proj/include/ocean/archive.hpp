#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ocean/scene.hpp"
#include "ocean/tensor.hpp"

namespace ocean {

struct GenOptions {
  std::string rules = "hans3-lite";
  int resolution = 32;  // 32 or 64
  int n_train = 2000;
  int n_val = 0;    // val_confounded
  int n_test = 500;  // test_nonconfounded
  uint64_t seed = 7;
  int threads = 1;
};

constexpr int kMaxObjects = 6;

struct Dataset {
  std::string rule_set;
  int resolution = 32;
  uint64_t seed = 0;
  std::vector<SceneAnnotation> scenes;
  std::vector<Tensor32> images;  // [3,R,R] per scene
  std::vector<Tensor32> masks;   // [kMaxObjects,R,R] per scene, zero padded

  int num_classes() const { return ruleset_by_name(rule_set).num_classes(); }
  std::vector<int> split_indices(Split s) const;
  int count(Split s) const { return static_cast<int>(split_indices(s).size()); }
};

/// Scene classes are drawn uniformly per index; each scene uses the RNG stream
/// keyed by (seed, split, index), so generation order and thread count do not
/// change the data.
Dataset generate_dataset(const GenOptions& opt);

// Archive layout ("OCDS", version 1), little-endian:
//   magic[4] | u32 version | u64 header_len | header JSON
//   | n * 3*R*R   f32 image payloads   (index order)
//   | n * 6*R*R   f32 mask payloads    (index order)
//   | u64 annot_len | annotation JSON
void write_archive(const std::string& path, const Dataset& ds);
Dataset read_archive(const std::string& path);

}  // namespace ocean
