#include "ocean/archive.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "ocean/parallel.hpp"
#include "ocean/render.hpp"

namespace ocean {

using nlohmann::json;

std::vector<int> Dataset::split_indices(Split s) const {
  std::vector<int> out;
  for (size_t i = 0; i < scenes.size(); ++i)
    if (scenes[i].split == s) out.push_back(static_cast<int>(i));
  return out;
}

Dataset generate_dataset(const GenOptions& opt) {
  const RuleSet& rs = ruleset_by_name(opt.rules);
  require(opt.resolution == 32 || opt.resolution == 64,
          "generate_dataset: resolution must be 32 or 64");
  require(opt.n_train + opt.n_val + opt.n_test > 0, "generate_dataset: empty dataset");

  Dataset ds;
  ds.rule_set = opt.rules;
  ds.resolution = opt.resolution;
  ds.seed = opt.seed;

  struct Item {
    Split split;
    int index;  // index within split
  };
  std::vector<Item> items;
  for (int i = 0; i < opt.n_train; ++i) items.push_back({Split::kTrain, i});
  for (int i = 0; i < opt.n_val; ++i) items.push_back({Split::kValConfounded, i});
  for (int i = 0; i < opt.n_test; ++i) items.push_back({Split::kTestNonconfounded, i});

  const int n = static_cast<int>(items.size());
  ds.scenes.resize(static_cast<size_t>(n));
  ds.images.resize(static_cast<size_t>(n));
  ds.masks.resize(static_cast<size_t>(n));

  Rng root(opt.seed);
  parallel_for(n, opt.threads, [&](int64_t i) {
    const Item& it = items[static_cast<size_t>(i)];
    Rng rng = root.child({static_cast<uint64_t>(it.split), static_cast<uint64_t>(it.index)});
    const int class_id = rng.randint(rs.num_classes());
    SceneAnnotation scene = generate_scene(rng, rs, class_id, it.split);
    scene.id = static_cast<int>(i);
    RenderResult rr = render(scene, opt.resolution);
    Tensor32 padded({kMaxObjects, opt.resolution, opt.resolution});
    for (size_t o = 0; o < rr.masks.size() && o < kMaxObjects; ++o)
      std::copy(rr.masks[o].data.begin(), rr.masks[o].data.end(),
                padded.data.begin() + static_cast<int64_t>(o) * opt.resolution * opt.resolution);
    ds.scenes[static_cast<size_t>(i)] = std::move(scene);
    ds.images[static_cast<size_t>(i)] = std::move(rr.image);
    ds.masks[static_cast<size_t>(i)] = std::move(padded);
  });
  return ds;
}

namespace {

constexpr char kMagic[4] = {'O', 'C', 'D', 'S'};
constexpr uint32_t kVersion = 1;

void write_bytes(std::ofstream& f, const void* p, size_t n) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_bytes(std::ifstream& f, void* p, size_t n, const char* what) {
  f.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (static_cast<size_t>(f.gcount()) != n)
    throw std::runtime_error(std::string("truncated archive while reading ") + what);
}

json scene_to_json(const SceneAnnotation& s) {
  json objs = json::array();
  for (const auto& o : s.objects)
    objs.push_back({{"shape", to_string(o.shape)},
                    {"color", to_string(o.color)},
                    {"size", to_string(o.size)},
                    {"x", o.x},
                    {"y", o.y}});
  return {{"id", s.id},
          {"label", s.label},
          {"split", to_string(s.split)},
          {"confounded", s.confounded},
          {"objects", objs}};
}

ShapeKind shape_from_string(const std::string& s) {
  if (s == "circle") return ShapeKind::kCircle;
  if (s == "square") return ShapeKind::kSquare;
  if (s == "triangle") return ShapeKind::kTriangle;
  throw std::runtime_error("unknown shape in archive: " + s);
}

ColorKind color_from_string(const std::string& s) {
  if (s == "red") return ColorKind::kRed;
  if (s == "green") return ColorKind::kGreen;
  if (s == "blue") return ColorKind::kBlue;
  if (s == "yellow") return ColorKind::kYellow;
  throw std::runtime_error("unknown color in archive: " + s);
}

SceneAnnotation scene_from_json(const json& j) {
  SceneAnnotation s;
  s.id = j.at("id").get<int>();
  s.label = j.at("label").get<int>();
  s.split = split_from_string(j.at("split").get<std::string>());
  s.confounded = j.at("confounded").get<bool>();
  for (const auto& jo : j.at("objects")) {
    ObjectSpec o;
    o.shape = shape_from_string(jo.at("shape").get<std::string>());
    o.color = color_from_string(jo.at("color").get<std::string>());
    o.size = jo.at("size").get<std::string>() == "large" ? SizeKind::kLarge : SizeKind::kSmall;
    o.x = jo.at("x").get<double>();
    o.y = jo.at("y").get<double>();
    s.objects.push_back(o);
  }
  return s;
}

}  // namespace

void write_archive(const std::string& path, const Dataset& ds) {
  require(!ds.scenes.empty(), "write_archive: empty dataset");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_archive: cannot open " + path);

  const int n = static_cast<int>(ds.scenes.size());
  json header = {{"rule_set", ds.rule_set},
                 {"resolution", ds.resolution},
                 {"seed", ds.seed},
                 {"max_objects", kMaxObjects},
                 {"n_scenes", n},
                 {"counts",
                  {{"train", ds.count(Split::kTrain)},
                   {"val_confounded", ds.count(Split::kValConfounded)},
                   {"test_nonconfounded", ds.count(Split::kTestNonconfounded)}}}};
  const std::string hs = header.dump();

  write_bytes(f, kMagic, 4);
  const uint32_t version = kVersion;
  write_bytes(f, &version, 4);
  const uint64_t hlen = hs.size();
  write_bytes(f, &hlen, 8);
  write_bytes(f, hs.data(), hs.size());
  for (const auto& img : ds.images) write_bytes(f, img.ptr(), sizeof(float) * img.data.size());
  for (const auto& m : ds.masks) write_bytes(f, m.ptr(), sizeof(float) * m.data.size());

  json annots = json::array();
  for (const auto& s : ds.scenes) annots.push_back(scene_to_json(s));
  const std::string as = json{{"scenes", annots}}.dump();
  const uint64_t alen = as.size();
  write_bytes(f, &alen, 8);
  write_bytes(f, as.data(), as.size());
  if (!f) throw std::runtime_error("write_archive: write failed for " + path);
}

Dataset read_archive(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("read_archive: cannot open " + path);

  char magic[4];
  read_bytes(f, magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("read_archive: bad magic in " + path);
  uint32_t version = 0;
  read_bytes(f, &version, 4, "version");
  if (version != kVersion)
    throw std::runtime_error("read_archive: unsupported version " + std::to_string(version));

  uint64_t hlen = 0;
  read_bytes(f, &hlen, 8, "header length");
  std::string hs(hlen, '\0');
  read_bytes(f, hs.data(), hlen, "header");
  json header = json::parse(hs);

  Dataset ds;
  ds.rule_set = header.at("rule_set").get<std::string>();
  ds.resolution = header.at("resolution").get<int>();
  ds.seed = header.at("seed").get<uint64_t>();
  const int n = header.at("n_scenes").get<int>();
  const int R = ds.resolution;

  ds.images.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Tensor32 img({3, R, R});
    read_bytes(f, img.ptr(), sizeof(float) * img.data.size(), "image payload");
    ds.images.push_back(std::move(img));
  }
  ds.masks.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Tensor32 m({kMaxObjects, R, R});
    read_bytes(f, m.ptr(), sizeof(float) * m.data.size(), "mask payload");
    ds.masks.push_back(std::move(m));
  }

  uint64_t alen = 0;
  read_bytes(f, &alen, 8, "annotation length");
  std::string as(alen, '\0');
  read_bytes(f, as.data(), alen, "annotations");
  json annots = json::parse(as);
  for (const auto& js : annots.at("scenes")) ds.scenes.push_back(scene_from_json(js));
  if (static_cast<int>(ds.scenes.size()) != n)
    throw std::runtime_error("read_archive: annotation count mismatch");
  return ds;
}

}  // namespace ocean
