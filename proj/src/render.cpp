#include "ocean/render.hpp"

#include <cmath>

namespace ocean {

std::array<float, 3> color_rgb(ColorKind c) {
  switch (c) {
    case ColorKind::kRed: return {0.85f, 0.15f, 0.15f};
    case ColorKind::kGreen: return {0.15f, 0.75f, 0.20f};
    case ColorKind::kBlue: return {0.20f, 0.35f, 0.85f};
    case ColorKind::kYellow: return {0.90f, 0.85f, 0.20f};
  }
  return {0, 0, 0};
}

bool object_contains(const ObjectSpec& o, double px, double py) {
  const double u = px - o.x, v = py - o.y;
  const double s = o.nominal();
  switch (o.shape) {
    case ShapeKind::kCircle:
      return u * u + v * v <= s * s;
    case ShapeKind::kSquare: {
      const double h = 0.9 * s;
      return std::abs(u) <= h && std::abs(v) <= h;
    }
    case ShapeKind::kTriangle: {
      // equilateral, apex up (v grows downwards), circumradius rc
      const double rc = 1.25 * s;
      const double half_base = rc * 0.8660254037844386;
      return v <= 0.5 * rc && half_base * (v + rc) >= 1.5 * rc * std::abs(u);
    }
  }
  return false;
}

RenderResult render(const SceneAnnotation& scene, int resolution) {
  const int R = resolution;
  constexpr int kSub = 4;
  const int n = static_cast<int>(scene.objects.size());

  RenderResult out;
  out.image = Tensor32({3, R, R}, kBackgroundGray);
  out.masks.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.masks.emplace_back(Shape{R, R});

  std::vector<int> owner_count(static_cast<size_t>(n) + 1);
  for (int row = 0; row < R; ++row) {
    for (int col = 0; col < R; ++col) {
      float acc[3] = {0, 0, 0};
      std::fill(owner_count.begin(), owner_count.end(), 0);
      for (int sy = 0; sy < kSub; ++sy) {
        for (int sx = 0; sx < kSub; ++sx) {
          const double px = (col + (sx + 0.5) / kSub) / R;
          const double py = (row + (sy + 0.5) / kSub) / R;
          int owner = -1;
          for (int i = n - 1; i >= 0; --i) {  // last drawn is on top
            if (object_contains(scene.objects[static_cast<size_t>(i)], px, py)) {
              owner = i;
              break;
            }
          }
          if (owner >= 0) {
            const auto rgb = color_rgb(scene.objects[static_cast<size_t>(owner)].color);
            for (int c = 0; c < 3; ++c) acc[c] += rgb[static_cast<size_t>(c)];
            owner_count[static_cast<size_t>(owner)]++;
          } else {
            for (int c = 0; c < 3; ++c) acc[c] += kBackgroundGray;
          }
        }
      }
      const float inv = 1.0f / (kSub * kSub);
      for (int c = 0; c < 3; ++c) out.image.at3(c, row, col) = acc[c] * inv;
      for (int i = 0; i < n; ++i)
        out.masks[static_cast<size_t>(i)].at2(row, col) =
            owner_count[static_cast<size_t>(i)] * inv;
    }
  }
  return out;
}

}  // namespace ocean
