#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocean/rng.hpp"

namespace ocean {

enum class ShapeKind { kCircle = 0, kSquare = 1, kTriangle = 2 };
enum class ColorKind { kRed = 0, kGreen = 1, kBlue = 2, kYellow = 3 };
enum class SizeKind { kSmall = 0, kLarge = 1 };
enum class Split { kTrain = 0, kValConfounded = 1, kTestNonconfounded = 2 };

const char* to_string(ShapeKind s);
const char* to_string(ColorKind c);
const char* to_string(SizeKind s);
const char* to_string(Split s);
Split split_from_string(const std::string& s);

struct ObjectSpec {
  ShapeKind shape = ShapeKind::kCircle;
  ColorKind color = ColorKind::kRed;
  SizeKind size = SizeKind::kSmall;
  double x = 0.5, y = 0.5;  // centre, canvas units [0,1); y grows downwards

  /// Nominal size in canvas units.
  double nominal() const { return size == SizeKind::kLarge ? 0.115 : 0.07; }
  /// Radius of the covering disc used for placement and overlap checks.
  double outer_radius() const;
};

struct SceneAnnotation {
  int id = 0;
  std::vector<ObjectSpec> objects;  // 2..6, draw order; later objects occlude
  int label = 0;
  Split split = Split::kTrain;
  bool confounded = false;
};

using ScenePredicate = std::function<bool(std::span<const ObjectSpec>)>;

struct ClassRule {
  std::string description;
  ScenePredicate predicate;         // empty for the default class
  ScenePredicate confounder;        // empty when the class has no confounder
  double confounder_base_rate = 0;  // expected rate on the non-confounded split
};

struct RuleSet {
  std::string name;
  std::vector<ClassRule> classes;
  int default_class = -1;
  int num_classes() const { return static_cast<int>(classes.size()); }
};

/// hans3-lite or hans7-lite.
const RuleSet& ruleset_by_name(const std::string& name);

/// First matching class predicate in index order; default class if none.
int rule_evaluate(std::span<const ObjectSpec> objects, const RuleSet& rs);

/// Rejection-samples a scene satisfying the class predicate; the class
/// confounder additionally holds on confounded splits. Throws after 10,000
/// failed attempts, naming the predicate.
SceneAnnotation generate_scene(Rng& rng, const RuleSet& rs, int class_id, Split split);

inline bool split_is_confounded(Split s) { return s != Split::kTestNonconfounded; }

}  // namespace ocean
