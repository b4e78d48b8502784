#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ocean/archive.hpp"
#include "ocean/render.hpp"
#include "ocean/scene.hpp"

using namespace ocean;

namespace {

bool has_large_red_square(std::span<const ObjectSpec> objs) {
  for (const auto& o : objs)
    if (o.shape == ShapeKind::kSquare && o.color == ColorKind::kRed &&
        o.size == SizeKind::kLarge)
      return true;
  return false;
}

// Independent oracle for the hans3-lite predicates, coded from the rule
// descriptions rather than by reusing the library predicates.
int hans3_oracle(std::span<const ObjectSpec> objs) {
  if (has_large_red_square(objs)) return 0;
  bool sgc = false, lt = false;
  for (const auto& o : objs) {
    if (o.shape == ShapeKind::kCircle && o.color == ColorKind::kGreen &&
        o.size == SizeKind::kSmall)
      sgc = true;
    if (o.shape == ShapeKind::kTriangle && o.size == SizeKind::kLarge) lt = true;
  }
  if (sgc && lt) return 1;
  return 2;
}

}  // namespace

TEST_CASE("hans3 class 0: confounder holds on train, varies on test") {
  const RuleSet& rs = ruleset_by_name("hans3-lite");
  Rng rng(11);
  for (int i = 0; i < 50; ++i) {
    auto scene = generate_scene(rng, rs, 0, Split::kTrain);
    REQUIRE(has_large_red_square(scene.objects));
    bool bottom = false;
    for (const auto& o : scene.objects)
      if (o.shape == ShapeKind::kSquare && o.color == ColorKind::kRed &&
          o.size == SizeKind::kLarge && o.y >= 0.5)
        bottom = true;
    CHECK(bottom);
  }

  int top = 0, bottom = 0;
  for (int i = 0; i < 200; ++i) {
    auto scene = generate_scene(rng, rs, 0, Split::kTestNonconfounded);
    REQUIRE(has_large_red_square(scene.objects));
    for (const auto& o : scene.objects)
      if (o.shape == ShapeKind::kSquare && o.color == ColorKind::kRed &&
          o.size == SizeKind::kLarge)
        (o.y >= 0.5 ? bottom : top)++;
  }
  CHECK(top > 50);
  CHECK(bottom > 50);
}

TEST_CASE("scene invariants: object count, bounds, labels re-derivable") {
  for (const char* name : {"hans3-lite", "hans7-lite"}) {
    const RuleSet& rs = ruleset_by_name(name);
    Rng rng(17);
    for (int i = 0; i < 120; ++i) {
      const int cls = i % rs.num_classes();
      const Split split = (i % 2) ? Split::kTrain : Split::kTestNonconfounded;
      auto scene = generate_scene(rng, rs, cls, split);
      CHECK(scene.label == cls);
      CHECK(rule_evaluate(scene.objects, rs) == scene.label);
      CHECK(scene.objects.size() >= 2);
      CHECK(scene.objects.size() <= 6);
      for (const auto& o : scene.objects) {
        const double r = o.outer_radius();
        CHECK(o.x >= r - 1e-12);
        CHECK(o.x <= 1 - r + 1e-12);
        CHECK(o.y >= r - 1e-12);
        CHECK(o.y <= 1 - r + 1e-12);
      }
    }
  }
}

TEST_CASE("confounder contract: 100% on confounded split, base rate on test") {
  for (const char* name : {"hans3-lite", "hans7-lite"}) {
    const RuleSet& rs = ruleset_by_name(name);
    Rng rng(23);
    for (int cls = 0; cls < rs.num_classes(); ++cls) {
      const ClassRule& rule = rs.classes[static_cast<size_t>(cls)];
      if (!rule.confounder) continue;
      const int n = 300;
      int conf_hits = 0, test_hits = 0;
      for (int i = 0; i < n; ++i) {
        auto c = generate_scene(rng, rs, cls, Split::kValConfounded);
        if (rule.confounder(c.objects)) conf_hits++;
        auto t = generate_scene(rng, rs, cls, Split::kTestNonconfounded);
        if (rule.confounder(t.objects)) test_hits++;
      }
      INFO(name << " class " << cls);
      CHECK(conf_hits == n);
      const double rate = double(test_hits) / n;
      CHECK(rate > rule.confounder_base_rate - 0.09);
      CHECK(rate < rule.confounder_base_rate + 0.09);
    }
  }
}

TEST_CASE("rule_evaluate: empty scene and exhaustive single-object grid") {
  const RuleSet& rs = ruleset_by_name("hans3-lite");
  CHECK(rule_evaluate({}, rs) == 2);

  // enumerate all single-object scenes on a 3x3 position grid
  int counts[3] = {0, 0, 0};
  int oracle_counts[3] = {0, 0, 0};
  for (int sh = 0; sh < 3; ++sh)
    for (int co = 0; co < 4; ++co)
      for (int sz = 0; sz < 2; ++sz)
        for (int gx = 0; gx < 3; ++gx)
          for (int gy = 0; gy < 3; ++gy) {
            ObjectSpec o{static_cast<ShapeKind>(sh), static_cast<ColorKind>(co),
                         static_cast<SizeKind>(sz), 0.25 + 0.25 * gx, 0.25 + 0.25 * gy};
            std::vector<ObjectSpec> objs = {o};
            counts[rule_evaluate(objs, rs)]++;
            oracle_counts[hans3_oracle(objs)]++;
          }
  CHECK(counts[0] == oracle_counts[0]);
  CHECK(counts[1] == oracle_counts[1]);
  CHECK(counts[2] == oracle_counts[2]);
  CHECK(counts[0] == 9);  // exactly the large red squares
  CHECK(counts[1] == 0);  // the pair rule can never fire with one object
}

TEST_CASE("generated class balance is within 2% of uniform") {
  const RuleSet& rs = ruleset_by_name("hans3-lite");
  Rng root(31);
  const int n = 10000;
  int counts[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    Rng rng = root.child({2, static_cast<uint64_t>(i)});
    const int cls = rng.randint(rs.num_classes());
    auto scene = generate_scene(rng, rs, cls, Split::kTestNonconfounded);
    counts[scene.label]++;
  }
  for (int c = 0; c < 3; ++c) {
    const double frac = double(counts[c]) / n;
    CHECK(frac > 1.0 / 3 - 0.02);
    CHECK(frac < 1.0 / 3 + 0.02);
  }
}

TEST_CASE("render: empty scene is constant background") {
  SceneAnnotation scene;
  auto rr = render(scene, 32);
  for (float v : rr.image.data) CHECK(v == kBackgroundGray);
  CHECK(rr.masks.empty());
}

TEST_CASE("render: centred large circle mask area matches pi r^2") {
  SceneAnnotation scene;
  scene.objects.push_back({ShapeKind::kCircle, ColorKind::kRed, SizeKind::kLarge, 0.5, 0.5});
  const int R = 32;
  auto rr = render(scene, R);
  const double r_px = 0.115 * R;
  const double area = 3.14159265358979 * r_px * r_px;
  double mask_area = 0;
  for (float v : rr.masks[0].data) mask_area += v;
  const double band = 2 * 3.14159265358979 * r_px * 0.25;  // anti-aliasing band
  CHECK(mask_area > area - band);
  CHECK(mask_area < area + band);
}

TEST_CASE("render: disjoint objects give disjoint masks covering non-background") {
  SceneAnnotation scene;
  scene.objects.push_back({ShapeKind::kSquare, ColorKind::kBlue, SizeKind::kLarge, 0.25, 0.3});
  scene.objects.push_back({ShapeKind::kTriangle, ColorKind::kYellow, SizeKind::kSmall, 0.72, 0.7});
  const int R = 32;
  auto rr = render(scene, R);
  for (int p = 0; p < R * R; ++p) {
    CHECK(std::min(rr.masks[0][p], rr.masks[1][p]) == 0.0f);
    const bool non_bg = rr.image[p] != kBackgroundGray ||
                        rr.image[R * R + p] != kBackgroundGray ||
                        rr.image[2 * R * R + p] != kBackgroundGray;
    const bool masked = rr.masks[0][p] + rr.masks[1][p] > 0.0f;
    CHECK(non_bg == masked);
  }
}

TEST_CASE("render: determinism and generated-scene overlap bound") {
  const RuleSet& rs = ruleset_by_name("hans7-lite");
  Rng rng(37);
  for (int i = 0; i < 10; ++i) {
    auto scene = generate_scene(rng, rs, i % 7, Split::kTrain);
    auto a = render(scene, 32);
    auto b = render(scene, 32);
    CHECK(a.image.data == b.image.data);

    // pairwise overlap of unoccluded shapes stays under 20% of the smaller
    for (size_t i1 = 0; i1 < scene.objects.size(); ++i1)
      for (size_t i2 = i1 + 1; i2 < scene.objects.size(); ++i2) {
        SceneAnnotation s1, s2;
        s1.objects = {scene.objects[i1]};
        s2.objects = {scene.objects[i2]};
        auto m1 = render(s1, 64), m2 = render(s2, 64);
        double inter = 0, a1 = 0, a2 = 0;
        for (int p = 0; p < 64 * 64; ++p) {
          inter += std::min(m1.masks[0][p], m2.masks[0][p]);
          a1 += m1.masks[0][p];
          a2 += m2.masks[0][p];
        }
        CHECK(inter <= 0.2 * std::min(a1, a2) + 1e-9);
      }
  }
}

TEST_CASE("archive: round-trip is bit exact") {
  GenOptions opt;
  opt.n_train = 6;
  opt.n_val = 2;
  opt.n_test = 2;
  opt.seed = 5;
  Dataset ds = generate_dataset(opt);
  REQUIRE(ds.scenes.size() == 10);

  const std::string path = "test_roundtrip.ocds";
  write_archive(path, ds);
  Dataset back = read_archive(path);

  REQUIRE(back.scenes.size() == ds.scenes.size());
  CHECK(back.rule_set == ds.rule_set);
  CHECK(back.resolution == ds.resolution);
  CHECK(back.seed == ds.seed);
  for (size_t i = 0; i < ds.scenes.size(); ++i) {
    CHECK(back.images[i].data == ds.images[i].data);
    CHECK(back.masks[i].data == ds.masks[i].data);
    CHECK(back.scenes[i].label == ds.scenes[i].label);
    CHECK(back.scenes[i].split == ds.scenes[i].split);
    REQUIRE(back.scenes[i].objects.size() == ds.scenes[i].objects.size());
    for (size_t o = 0; o < ds.scenes[i].objects.size(); ++o) {
      CHECK(back.scenes[i].objects[o].shape == ds.scenes[i].objects[o].shape);
      CHECK(back.scenes[i].objects[o].x == ds.scenes[i].objects[o].x);
    }
  }
  std::remove(path.c_str());
}

TEST_CASE("archive: distinct errors for bad magic, version, truncation") {
  GenOptions opt;
  opt.n_train = 3;
  opt.n_test = 0;
  Dataset ds = generate_dataset(opt);
  const std::string path = "test_corrupt.ocds";
  write_archive(path, ds);

  auto clobber = [&](size_t offset, char value) {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(static_cast<std::streamoff>(offset));
    f.write(&value, 1);
  };

  clobber(0, 'X');
  CHECK_THROWS_WITH_AS(read_archive(path), doctest::Contains("bad magic"), std::runtime_error);
  clobber(0, 'O');

  clobber(4, 9);
  CHECK_THROWS_WITH_AS(read_archive(path), doctest::Contains("unsupported version"),
                       std::runtime_error);
  clobber(4, 1);
  CHECK_NOTHROW(read_archive(path));

  const auto full = std::filesystem::file_size(path);
  std::filesystem::resize_file(path, full / 2);
  CHECK_THROWS_WITH_AS(read_archive(path), doctest::Contains("truncated"), std::runtime_error);
  std::remove(path.c_str());
}

TEST_CASE("archive: file size within 5% of header-predicted payload") {
  GenOptions opt;
  opt.n_train = 400;
  opt.n_test = 100;
  opt.seed = 9;
  opt.threads = 2;
  Dataset ds = generate_dataset(opt);
  const std::string path = "test_size.ocds";
  write_archive(path, ds);
  const double predicted =
      500.0 * (3 + kMaxObjects) * opt.resolution * opt.resolution * sizeof(float);
  const double actual = static_cast<double>(std::filesystem::file_size(path));
  CHECK(actual > predicted);
  CHECK(actual < predicted * 1.05);
  std::remove(path.c_str());
}

TEST_CASE("dataset generation is order- and thread-independent") {
  GenOptions opt;
  opt.n_train = 20;
  opt.n_test = 10;
  opt.seed = 77;
  opt.threads = 1;
  Dataset a = generate_dataset(opt);
  opt.threads = 4;
  Dataset b = generate_dataset(opt);
  for (size_t i = 0; i < a.scenes.size(); ++i) {
    CHECK(a.scenes[i].label == b.scenes[i].label);
    CHECK(a.images[i].data == b.images[i].data);
  }
}
