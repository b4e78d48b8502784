#include "ocean/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "ocean/tensor.hpp"

namespace ocean {

const char* to_string(ShapeKind s) {
  switch (s) {
    case ShapeKind::kCircle: return "circle";
    case ShapeKind::kSquare: return "square";
    case ShapeKind::kTriangle: return "triangle";
  }
  return "?";
}

const char* to_string(ColorKind c) {
  switch (c) {
    case ColorKind::kRed: return "red";
    case ColorKind::kGreen: return "green";
    case ColorKind::kBlue: return "blue";
    case ColorKind::kYellow: return "yellow";
  }
  return "?";
}

const char* to_string(SizeKind s) { return s == SizeKind::kLarge ? "large" : "small"; }

const char* to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kValConfounded: return "val_confounded";
    case Split::kTestNonconfounded: return "test_nonconfounded";
  }
  return "?";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::kTrain;
  if (s == "val_confounded") return Split::kValConfounded;
  if (s == "test_nonconfounded") return Split::kTestNonconfounded;
  throw std::invalid_argument("unknown split: " + s);
}

double ObjectSpec::outer_radius() const {
  const double s = nominal();
  switch (shape) {
    case ShapeKind::kCircle: return s;
    case ShapeKind::kSquare: return 0.9 * s * std::sqrt(2.0);
    case ShapeKind::kTriangle: return 1.25 * s;
  }
  return s;
}

namespace {

constexpr int kMaxAttempts = 10000;
// Minimum centre gap as a fraction of summed covering radii. At 0.9 the discs
// overlap by <4% of the smaller disc, well under the 20% shape-overlap bound.
constexpr double kMinGapFactor = 0.9;

bool is(const ObjectSpec& o, ShapeKind sh) { return o.shape == sh; }

bool matches(const ObjectSpec& o, ShapeKind sh, ColorKind c, SizeKind sz) {
  return o.shape == sh && o.color == c && o.size == sz;
}

bool has(std::span<const ObjectSpec> objs, const std::function<bool(const ObjectSpec&)>& p) {
  return std::any_of(objs.begin(), objs.end(), p);
}

int count(std::span<const ObjectSpec> objs, const std::function<bool(const ObjectSpec&)>& p) {
  return static_cast<int>(std::count_if(objs.begin(), objs.end(), p));
}

// ---- shared predicates ----

bool pred_large_red_square(std::span<const ObjectSpec> s) {
  return has(s, [](const ObjectSpec& o) {
    return matches(o, ShapeKind::kSquare, ColorKind::kRed, SizeKind::kLarge);
  });
}

bool conf_large_red_square_bottom(std::span<const ObjectSpec> s) {
  return has(s, [](const ObjectSpec& o) {
    return matches(o, ShapeKind::kSquare, ColorKind::kRed, SizeKind::kLarge) && o.y >= 0.5;
  });
}

bool pred_green_circle_and_large_triangle(std::span<const ObjectSpec> s) {
  return has(s, [](const ObjectSpec& o) {
           return matches(o, ShapeKind::kCircle, ColorKind::kGreen, SizeKind::kSmall);
         }) &&
         has(s, [](const ObjectSpec& o) {
           return is(o, ShapeKind::kTriangle) && o.size == SizeKind::kLarge;
         });
}

bool conf_large_blue_triangle(std::span<const ObjectSpec> s) {
  return has(s, [](const ObjectSpec& o) {
    return matches(o, ShapeKind::kTriangle, ColorKind::kBlue, SizeKind::kLarge);
  });
}

bool pred_blue_triangle_and_yellow_circle(std::span<const ObjectSpec> s) {
  return has(s, [](const ObjectSpec& o) {
           return is(o, ShapeKind::kTriangle) && o.color == ColorKind::kBlue;
         }) &&
         has(s, [](const ObjectSpec& o) {
           return is(o, ShapeKind::kCircle) && o.color == ColorKind::kYellow;
         });
}

bool pred_same_color_square_pair(std::span<const ObjectSpec> s) {
  for (ColorKind c : {ColorKind::kRed, ColorKind::kGreen, ColorKind::kBlue, ColorKind::kYellow})
    if (count(s, [c](const ObjectSpec& o) { return is(o, ShapeKind::kSquare) && o.color == c; }) >= 2)
      return true;
  return false;
}

bool conf_green_square_pair(std::span<const ObjectSpec> s) {
  return count(s, [](const ObjectSpec& o) {
           return is(o, ShapeKind::kSquare) && o.color == ColorKind::kGreen;
         }) >= 2;
}

bool pred_three_circles_left(std::span<const ObjectSpec> s) {
  return count(s, [](const ObjectSpec& o) { return is(o, ShapeKind::kCircle) && o.x < 0.5; }) >= 3;
}

bool pred_three_squares_right(std::span<const ObjectSpec> s) {
  return count(s, [](const ObjectSpec& o) { return is(o, ShapeKind::kSquare) && o.x >= 0.5; }) >= 3;
}

bool pred_disjunctive(std::span<const ObjectSpec> s) {
  return pred_three_circles_left(s) || pred_three_squares_right(s);
}

bool pred_red_circle_left_of_green_square(std::span<const ObjectSpec> s) {
  for (const auto& a : s) {
    if (!(is(a, ShapeKind::kCircle) && a.color == ColorKind::kRed)) continue;
    for (const auto& b : s)
      if (is(b, ShapeKind::kSquare) && b.color == ColorKind::kGreen && a.x < b.x) return true;
  }
  return false;
}

bool conf_red_circle_green_square_top(std::span<const ObjectSpec> s) {
  for (const auto& a : s) {
    if (!(is(a, ShapeKind::kCircle) && a.color == ColorKind::kRed && a.y < 0.5)) continue;
    for (const auto& b : s)
      if (is(b, ShapeKind::kSquare) && b.color == ColorKind::kGreen && b.y < 0.5 && a.x < b.x)
        return true;
  }
  return false;
}

bool conf_leftmost_top(std::span<const ObjectSpec> s) {
  if (s.empty()) return false;
  const ObjectSpec* leftmost = &s[0];
  for (const auto& o : s)
    if (o.x < leftmost->x) leftmost = &o;
  return leftmost->y < 0.5;
}

RuleSet make_hans3() {
  RuleSet rs;
  rs.name = "hans3-lite";
  rs.classes.push_back({"contains a large red square", pred_large_red_square,
                        conf_large_red_square_bottom, 0.5});
  rs.classes.push_back({"contains a small green circle and a large triangle",
                        pred_green_circle_and_large_triangle, conf_large_blue_triangle, 0.25});
  rs.classes.push_back({"default (matches no other rule)", nullptr, conf_leftmost_top, 0.5});
  rs.default_class = 2;
  return rs;
}

RuleSet make_hans7() {
  RuleSet rs;
  rs.name = "hans7-lite";
  rs.classes.push_back({"contains a large red square", pred_large_red_square,
                        conf_large_red_square_bottom, 0.5});
  rs.classes.push_back({"contains a small green circle and a large triangle",
                        pred_green_circle_and_large_triangle, conf_large_blue_triangle, 0.25});
  rs.classes.push_back({"contains a blue triangle and a yellow circle",
                        pred_blue_triangle_and_yellow_circle,
                        [](std::span<const ObjectSpec> s) {
                          return has(s, [](const ObjectSpec& o) {
                            return matches(o, ShapeKind::kTriangle, ColorKind::kBlue,
                                           SizeKind::kLarge);
                          });
                        },
                        0.5});
  rs.classes.push_back({"contains two squares of the same color", pred_same_color_square_pair,
                        conf_green_square_pair, 1.0 / 3.0});
  rs.classes.push_back({"three circles in the left half or three squares in the right half",
                        pred_disjunctive, pred_three_circles_left, 0.5});
  rs.classes.push_back({"contains a red circle left of a green square",
                        pred_red_circle_left_of_green_square,
                        conf_red_circle_green_square_top, 0.25});
  rs.classes.push_back({"default (matches no other rule)", nullptr, conf_leftmost_top, 0.5});
  rs.default_class = 6;
  return rs;
}

struct Range {
  double lo = 0.0, hi = 1.0;
};

/// Sample a position for `obj` inside the canvas (and the given ranges),
/// keeping its covering disc at least kMinGapFactor of summed radii away from
/// every placed object. Returns false when no spot was found.
bool place(Rng& rng, std::vector<ObjectSpec>& objs, ObjectSpec obj, Range xr = {}, Range yr = {}) {
  const double r = obj.outer_radius();
  const double xlo = std::max(r, xr.lo), xhi = std::min(1.0 - r, xr.hi);
  const double ylo = std::max(r, yr.lo), yhi = std::min(1.0 - r, yr.hi);
  if (xlo >= xhi || ylo >= yhi) return false;
  for (int tries = 0; tries < 64; ++tries) {
    obj.x = rng.uniform(xlo, xhi);
    obj.y = rng.uniform(ylo, yhi);
    bool ok = true;
    for (const auto& other : objs) {
      const double dx = obj.x - other.x, dy = obj.y - other.y;
      const double min_gap = kMinGapFactor * (r + other.outer_radius());
      if (dx * dx + dy * dy < min_gap * min_gap) {
        ok = false;
        break;
      }
    }
    if (ok) {
      objs.push_back(obj);
      return true;
    }
  }
  return false;
}

ColorKind random_color(Rng& rng) { return static_cast<ColorKind>(rng.randint(4)); }
SizeKind random_size(Rng& rng) { return static_cast<SizeKind>(rng.randint(2)); }

/// Distractor sampling; excluded combinations keep distractors from
/// accidentally satisfying any class predicate (checked again by rejection).
bool add_distractor(Rng& rng, std::vector<ObjectSpec>& objs, bool hans7) {
  for (int tries = 0; tries < 64; ++tries) {
    ObjectSpec o;
    o.shape = static_cast<ShapeKind>(rng.randint(3));
    o.color = random_color(rng);
    o.size = random_size(rng);
    if (matches(o, ShapeKind::kSquare, ColorKind::kRed, SizeKind::kLarge)) continue;
    if (matches(o, ShapeKind::kCircle, ColorKind::kGreen, SizeKind::kSmall)) continue;
    if (!hans7) {
      if (o.shape == ShapeKind::kTriangle && o.size == SizeKind::kLarge) continue;
    } else {
      if (o.shape == ShapeKind::kCircle && o.color == ColorKind::kYellow) continue;
      if (o.shape == ShapeKind::kSquare && o.color == ColorKind::kGreen) continue;
      if (o.shape == ShapeKind::kTriangle && o.color == ColorKind::kBlue) continue;
      // caps: same-color square pairs and circle triples are class evidence
      if (o.shape == ShapeKind::kSquare &&
          count(objs, [](const ObjectSpec& q) { return is(q, ShapeKind::kSquare); }) >= 1)
        continue;
      if (o.shape == ShapeKind::kCircle &&
          count(objs, [](const ObjectSpec& q) { return is(q, ShapeKind::kCircle); }) >= 2)
        continue;
    }
    if (place(rng, objs, o)) return true;
  }
  return false;
}

/// Insert the objects required by the class rule; confounded splits also pin
/// the confounded attribute/position.
bool plant(Rng& rng, std::vector<ObjectSpec>& objs, const RuleSet& rs, int class_id,
           bool confounded) {
  const bool hans7 = rs.name == "hans7-lite";
  switch (class_id) {
    case 0: {
      ObjectSpec sq{ShapeKind::kSquare, ColorKind::kRed, SizeKind::kLarge};
      return place(rng, objs, sq, {}, confounded ? Range{0.5, 1.0} : Range{});
    }
    case 1: {
      ObjectSpec circle{ShapeKind::kCircle, ColorKind::kGreen, SizeKind::kSmall};
      ObjectSpec tri{ShapeKind::kTriangle, confounded ? ColorKind::kBlue : random_color(rng),
                     SizeKind::kLarge};
      return place(rng, objs, circle) && place(rng, objs, tri);
    }
    case 2: {
      ObjectSpec tri{ShapeKind::kTriangle, ColorKind::kBlue,
                     confounded ? SizeKind::kLarge : random_size(rng)};
      ObjectSpec circle{ShapeKind::kCircle, ColorKind::kYellow, random_size(rng)};
      return place(rng, objs, tri) && place(rng, objs, circle);
    }
    case 3: {
      const ColorKind pool[3] = {ColorKind::kGreen, ColorKind::kBlue, ColorKind::kYellow};
      const ColorKind c = confounded ? ColorKind::kGreen : pool[rng.randint(3)];
      ObjectSpec a{ShapeKind::kSquare, c, random_size(rng)};
      ObjectSpec b{ShapeKind::kSquare, c, random_size(rng)};
      return place(rng, objs, a) && place(rng, objs, b);
    }
    case 4: {
      const bool circles_left = confounded ? true : rng.u01() < 0.5;
      if (circles_left) {
        for (int i = 0; i < 3; ++i) {
          ObjectSpec c{ShapeKind::kCircle, random_color(rng), random_size(rng)};
          if (!place(rng, objs, c, Range{0.0, 0.5})) return false;
        }
      } else {
        // distinct colors so the triple never doubles as a same-color pair
        ColorKind colors[4] = {ColorKind::kRed, ColorKind::kGreen, ColorKind::kBlue,
                               ColorKind::kYellow};
        for (int i = 3; i > 0; --i) std::swap(colors[i], colors[rng.randint(i + 1)]);
        for (int i = 0; i < 3; ++i) {
          ObjectSpec s{ShapeKind::kSquare, colors[i], random_size(rng)};
          if (!place(rng, objs, s, Range{0.5, 1.0})) return false;
        }
      }
      return true;
    }
    case 5: {
      ObjectSpec sq{ShapeKind::kSquare, ColorKind::kGreen, random_size(rng)};
      const Range y_top = confounded ? Range{0.0, 0.5} : Range{};
      if (!place(rng, objs, sq, {}, y_top)) return false;
      ObjectSpec circle{ShapeKind::kCircle, ColorKind::kRed, random_size(rng)};
      return place(rng, objs, circle, Range{0.0, objs.back().x - 0.01}, y_top);
    }
    default:
      (void)hans7;
      return true;  // default class plants nothing
  }
}

int planted_count(int class_id, int default_class) {
  if (class_id == default_class) return 0;
  switch (class_id) {
    case 0: return 1;
    case 4: return 3;
    default: return 2;
  }
}

}  // namespace

const RuleSet& ruleset_by_name(const std::string& name) {
  static const RuleSet hans3 = make_hans3();
  static const RuleSet hans7 = make_hans7();
  if (name == "hans3-lite") return hans3;
  if (name == "hans7-lite") return hans7;
  throw std::invalid_argument("unknown rule set: " + name);
}

int rule_evaluate(std::span<const ObjectSpec> objects, const RuleSet& rs) {
  for (int c = 0; c < rs.num_classes(); ++c)
    if (rs.classes[c].predicate && rs.classes[c].predicate(objects)) return c;
  return rs.default_class;
}

SceneAnnotation generate_scene(Rng& rng, const RuleSet& rs, int class_id, Split split) {
  require(class_id >= 0 && class_id < rs.num_classes(),
          "generate_scene: class " + std::to_string(class_id) + " invalid for " + rs.name);
  const bool confounded = split_is_confounded(split);
  const bool hans7 = rs.name == "hans7-lite";
  const ClassRule& rule = rs.classes[class_id];

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    std::vector<ObjectSpec> objs;
    if (!plant(rng, objs, rs, class_id, confounded)) continue;
    const int lo = std::max(2, planted_count(class_id, rs.default_class));
    const int target = lo + rng.randint(6 - lo + 1);
    bool filled = true;
    while (static_cast<int>(objs.size()) < target) {
      if (!add_distractor(rng, objs, hans7)) {
        filled = false;
        break;
      }
    }
    if (!filled) continue;
    if (rule_evaluate(objs, rs) != class_id) continue;
    if (confounded && rule.confounder && !rule.confounder(objs)) continue;

    SceneAnnotation scene;
    scene.objects = std::move(objs);
    scene.label = class_id;
    scene.split = split;
    scene.confounded = confounded;
    return scene;
  }
  throw std::runtime_error("generate_scene: could not satisfy predicate for class " +
                           std::to_string(class_id) + " ('" + rule.description + "') in " +
                           std::to_string(kMaxAttempts) + " attempts");
}

}  // namespace ocean
