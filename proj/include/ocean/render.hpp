#pragma once

#include <array>
#include <vector>

#include "ocean/scene.hpp"
#include "ocean/tensor.hpp"

namespace ocean {

constexpr float kBackgroundGray = 0.5f;

std::array<float, 3> color_rgb(ColorKind c);

struct RenderResult {
  Tensor32 image;               // [3,R,R], RGB in [0,1]
  std::vector<Tensor32> masks;  // per object [R,R]; visible coverage in [0,1]
};

/// Deterministic rasterisation with 4x4 supersampling. Objects are drawn in
/// list order; later objects occlude earlier ones, and masks cover only the
/// visible part, so they are disjoint per subsample.
RenderResult render(const SceneAnnotation& scene, int resolution);

/// True when the subpixel at canvas position (px,py) lies inside the object.
bool object_contains(const ObjectSpec& o, double px, double py);

}  // namespace ocean
