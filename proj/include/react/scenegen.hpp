#pragma once

// Synthetic two-session scenes with groups of visually identical objects,
// rigid changes between sessions, noisy view descriptors and complete
// ground truth.
//
// Each visual category (semantic class + visual type) owns a prototype
// descriptor. A view of an instance is
//   prototype + viewpoint * (cos(t) u + sin(t) w) + noise * N(0, I)
// with t uniform, u and w category-specific directions, followed by
// occlusion that zeroes each coordinate with the configured probability.
// In patch mode the prototype is a procedural h x w x c raster and the
// viewpoint term is a small in-plane rotation.
//
// With the default 192-dimensional abstract descriptors, prototypes sit
// about sqrt(2 d) ~ 19.6 apart while a view deviates from its prototype by
// about sqrt(d (viewpoint^2 + noise^2) + occlusion d); for
// viewpoint, noise <= 0.5 and occlusion <= 0.2 every view stays closer to
// its own prototype than to any other.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "react/augment.hpp"
#include "react/common.hpp"
#include "react/embedding.hpp"
#include "react/scene_model.hpp"

namespace react {

inline constexpr int kScenarioSchemaVersion = 1;

enum class DescriptorMode { abstract, patch };

struct CategoryCount {
  std::string semantic_class;
  int visual_type = 1;
  int count = 1;
};

/// Picks the `ordinal`-th session-0 instance of a visual category.
struct Selector {
  std::string semantic_class;
  int visual_type = 1;
  int ordinal = 0;
};

struct ChangeOp {
  enum class Kind { move, remove, add };
  Kind kind = Kind::move;
  Selector target;             // move, remove
  Vec3 displacement{0, 0, 0};  // move
  std::string semantic_class;  // add
  int visual_type = 1;         // add
  std::optional<Vec3> position;  // add; sampled when absent
};

struct ViewModel {
  int views_min = 12;
  int views_max = 20;
  DescriptorMode mode = DescriptorMode::abstract;
  std::size_t descriptor_dim = 192;
  std::size_t patch_height = 8;
  std::size_t patch_width = 8;
  std::size_t patch_channels = 3;
  double noise = 0.3;
  double viewpoint = 0.3;
  double occlusion = 0.1;
  double position_noise = 0.02;
  int frames_per_session = 40;
};

struct Arena {
  Vec3 min{0, 0, 0};
  Vec3 max{10, 8, 0};
  double min_separation = 1.0;
};

struct ScenarioSpec {
  std::string name = "custom";
  std::vector<CategoryCount> categories;
  std::vector<ChangeOp> change_script;
  ViewModel view_model;
  Arena arena;
  std::uint64_t seed = 0;

  void validate() const {
    auto fail = [](const std::string& m) { throw Error(ErrorKind::validation, "ScenarioSpec: " + m); };
    if (categories.empty()) fail("no categories");
    for (const auto& c : categories)
      if (c.count < 1) fail("category count must be >= 1");
    for (const auto& op : change_script) {
      if (op.kind == ChangeOp::Kind::move && !all_finite(op.displacement))
        fail("non-finite displacement");
      if (op.kind == ChangeOp::Kind::add && op.position && !all_finite(*op.position))
        fail("non-finite add position");
    }
    const auto& v = view_model;
    if (v.views_min < 1 || v.views_max < v.views_min) fail("views_per_instance range");
    if (!(v.occlusion >= 0.0 && v.occlusion < 1.0)) fail("occlusion must be in [0,1)");
    if (!(v.noise >= 0.0) || !(v.viewpoint >= 0.0) || !(v.position_noise >= 0.0))
      fail("negative noise amplitude");
    if (v.frames_per_session < 1) fail("frames_per_session must be >= 1");
    if (v.mode == DescriptorMode::patch &&
        v.patch_height * v.patch_width * v.patch_channels != v.descriptor_dim)
      fail("patch dims inconsistent with descriptor_dim");
    if (v.descriptor_dim == 0) fail("descriptor_dim must be > 0");
  }
};

/// One segmented view as delivered to the pipeline. Carries no identity.
struct Observation {
  ViewDescriptor view;
  std::string semantic_class;
  Vec3 position{0, 0, 0};

  bool operator==(const Observation&) const = default;
};

struct Frame {
  std::int64_t frame_index = 0;
  std::vector<Observation> observations;

  bool operator==(const Frame&) const = default;
};

struct InstanceTruth {
  std::string physical_id;
  std::string semantic_class;
  int visual_type = 1;
  /// Global visual category label.
  int label = 0;

  bool operator==(const InstanceTruth&) const = default;
};

struct SessionTruth {
  std::string session_id;
  std::map<std::string, InstanceTruth> instances;
  /// view_id -> instance_id; the only link from frames to identities.
  std::map<std::string, std::string> view_owner;

  bool operator==(const SessionTruth&) const = default;
};

struct TruthPair {
  std::string ref_id;
  std::string cur_id;
  double displacement = 0.0;

  bool operator==(const TruthPair&) const = default;
};

struct GroundTruth {
  std::vector<SessionTruth> sessions;
  std::vector<TruthPair> matched;
  std::vector<std::string> absent;
  std::vector<std::string> added;
  /// "class(type)" names per label.
  std::map<int, std::string> label_names;

  bool operator==(const GroundTruth&) const = default;
};

struct Scenario {
  ScenarioSpec spec;
  std::vector<SceneSnapshot> snapshots;
  std::vector<std::vector<Frame>> frames;
  GroundTruth truth;
};

namespace detail {

inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

struct CategoryModel {
  Vector prototype;
  Vector dir_u;
  Vector dir_w;
};

inline Vector procedural_patch(std::size_t h, std::size_t w, std::size_t c,
                               std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector out(h * w * c, 0.0);
  for (int blob = 0; blob < 3; ++blob) {
    const double bx = unit(rng) * static_cast<double>(w - 1);
    const double by = unit(rng) * static_cast<double>(h - 1);
    const double sigma = 0.8 + 1.5 * unit(rng);
    Vector color(c);
    for (auto& x : color) x = 4.0 * unit(rng) - 2.0;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double dx = static_cast<double>(x) - bx, dy = static_cast<double>(y) - by;
        const double g = std::exp(-(dx * dx + dy * dy) / (2 * sigma * sigma));
        for (std::size_t ch = 0; ch < c; ++ch) out[(y * w + x) * c + ch] += g * color[ch];
      }
  }
  return out;
}

inline CategoryModel make_category(const ViewModel& vm, std::uint64_t seed, int label) {
  auto rng = substream(seed, 0x9e37u, static_cast<std::uint64_t>(label));
  std::normal_distribution<double> n01(0.0, 1.0);
  CategoryModel m;
  if (vm.mode == DescriptorMode::patch) {
    m.prototype = procedural_patch(vm.patch_height, vm.patch_width, vm.patch_channels, rng);
  } else {
    m.prototype.resize(vm.descriptor_dim);
    m.dir_u.resize(vm.descriptor_dim);
    m.dir_w.resize(vm.descriptor_dim);
    for (auto& x : m.prototype) x = n01(rng);
    for (auto& x : m.dir_u) x = n01(rng);
    for (auto& x : m.dir_w) x = n01(rng);
  }
  return m;
}

inline Vector sample_view(const CategoryModel& cat, const ViewModel& vm,
                          std::mt19937_64& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vector v;
  if (vm.mode == DescriptorMode::patch) {
    const double deg = (2.0 * unit(rng) - 1.0) * 30.0 * vm.viewpoint;
    v = rotate_bilinear(cat.prototype, vm.patch_height, vm.patch_width,
                        vm.patch_channels, deg);
  } else {
    const double t = 2.0 * std::numbers::pi * unit(rng);
    const double cu = vm.viewpoint * std::cos(t), cw = vm.viewpoint * std::sin(t);
    v.resize(cat.prototype.size());
    for (std::size_t k = 0; k < v.size(); ++k)
      v[k] = cat.prototype[k] + cu * cat.dir_u[k] + cw * cat.dir_w[k];
  }
  for (double& x : v) {
    x += vm.noise * n01(rng);
    if (unit(rng) < vm.occlusion) x = 0.0;
  }
  return v;
}

struct PhysicalObject {
  std::string physical_id;
  std::string semantic_class;
  int visual_type = 1;
  int label = 0;
  Vec3 position{0, 0, 0};
};

inline std::string numbered(const std::string& prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, n);
  return prefix + buf;
}

}  // namespace detail

/// "class(type)" display name of a visual category.
inline std::string category_name(const std::string& semantic_class, int visual_type) {
  return semantic_class + "(" + std::to_string(visual_type) + ")";
}

/// Generates both sessions. Deterministic for a given spec (including seed).
/// Throws ErrorKind::validation when objects cannot be placed at the
/// arena's minimum separation.
inline Scenario generate(const ScenarioSpec& spec) {
  spec.validate();
  const ViewModel& vm = spec.view_model;

  // Labels in first-appearance order: initial categories, then additions.
  std::map<std::pair<std::string, int>, int> label_of;
  GroundTruth truth;
  auto label_for = [&](const std::string& cls, int type) {
    auto [it, inserted] = label_of.try_emplace({cls, type}, static_cast<int>(label_of.size()));
    if (inserted) truth.label_names[it->second] = category_name(cls, type);
    return it->second;
  };
  for (const auto& c : spec.categories) label_for(c.semantic_class, c.visual_type);
  for (const auto& op : spec.change_script)
    if (op.kind == ChangeOp::Kind::add) label_for(op.semantic_class, op.visual_type);

  std::map<int, detail::CategoryModel> cats;
  for (const auto& [key, label] : label_of)
    cats.emplace(label, detail::make_category(vm, spec.seed, label));

  auto place_rng = detail::substream(spec.seed, 0x51a7u);
  std::vector<Vec3> occupied;
  auto place = [&]() -> Vec3 {
    std::uniform_real_distribution<double> ux(spec.arena.min[0], spec.arena.max[0]);
    std::uniform_real_distribution<double> uy(spec.arena.min[1], spec.arena.max[1]);
    for (int attempt = 0; attempt < 20000; ++attempt) {
      const Vec3 p{ux(place_rng), uy(place_rng), spec.arena.min[2]};
      bool ok = true;
      for (const auto& q : occupied)
        if (euclidean(p, q) < spec.arena.min_separation) {
          ok = false;
          break;
        }
      if (ok) {
        occupied.push_back(p);
        return p;
      }
    }
    throw Error(ErrorKind::validation,
                "generate: arena capacity exceeded at minimum separation " +
                    std::to_string(spec.arena.min_separation) + " m");
  };

  // Session 0 objects.
  std::vector<detail::PhysicalObject> before;
  std::map<std::pair<std::string, int>, std::vector<std::size_t>> by_category;
  for (const auto& c : spec.categories) {
    for (int k = 0; k < c.count; ++k) {
      detail::PhysicalObject o;
      o.physical_id = detail::numbered("p", before.size(), 3);
      o.semantic_class = c.semantic_class;
      o.visual_type = c.visual_type;
      o.label = label_of.at({c.semantic_class, c.visual_type});
      o.position = place();
      by_category[{c.semantic_class, c.visual_type}].push_back(before.size());
      before.push_back(o);
    }
  }

  // Session 1 objects: apply the change script.
  std::vector<detail::PhysicalObject> after = before;
  std::vector<char> removed(before.size(), 0);
  auto resolve = [&](const Selector& s) -> std::size_t {
    auto it = by_category.find({s.semantic_class, s.visual_type});
    if (it == by_category.end() || s.ordinal < 0 ||
        static_cast<std::size_t>(s.ordinal) >= it->second.size())
      throw Error(ErrorKind::validation,
                  "generate: selector " + category_name(s.semantic_class, s.visual_type) +
                      "#" + std::to_string(s.ordinal) + " matches no object");
    return it->second[static_cast<std::size_t>(s.ordinal)];
  };
  for (const auto& op : spec.change_script) {
    if (op.kind == ChangeOp::Kind::move) {
      auto& p = after[resolve(op.target)].position;
      for (int d = 0; d < 3; ++d) p[d] += op.displacement[d];
      occupied.push_back(p);
    } else if (op.kind == ChangeOp::Kind::remove) {
      removed[resolve(op.target)] = 1;
    }
  }
  for (const auto& op : spec.change_script) {
    if (op.kind != ChangeOp::Kind::add) continue;
    detail::PhysicalObject o;
    o.physical_id = detail::numbered("p", after.size(), 3);
    o.semantic_class = op.semantic_class;
    o.visual_type = op.visual_type;
    o.label = label_of.at({op.semantic_class, op.visual_type});
    if (op.position) {
      o.position = *op.position;
      occupied.push_back(o.position);
    } else {
      o.position = place();
    }
    after.push_back(o);
    removed.push_back(0);
  }

  Scenario out;
  out.spec = spec;
  std::map<std::string, std::string> instance_of_physical[2];

  for (int session = 0; session < 2; ++session) {
    std::vector<std::size_t> live;
    const auto& objs = session == 0 ? before : after;
    for (std::size_t i = 0; i < objs.size(); ++i)
      if (session == 0 || !removed[i]) live.push_back(i);

    // Instance numbering is a seeded permutation so ids carry no order
    // shared between sessions.
    auto id_rng = detail::substream(spec.seed, 0x1d5u, static_cast<std::uint64_t>(session));
    std::vector<std::size_t> numbers(live.size());
    for (std::size_t k = 0; k < numbers.size(); ++k) numbers[k] = k;
    std::shuffle(numbers.begin(), numbers.end(), id_rng);

    const std::string prefix = "t" + std::to_string(session);
    SceneSnapshot snap;
    snap.session_id = "session" + std::to_string(session);
    snap.time_index = session;
    SessionTruth st;
    st.session_id = snap.session_id;

    auto view_rng = detail::substream(spec.seed, 0x7e3u, static_cast<std::uint64_t>(session));
    auto pos_rng = detail::substream(spec.seed, 0x905u, static_cast<std::uint64_t>(session));
    std::uniform_int_distribution<int> view_count(vm.views_min, vm.views_max);
    std::uniform_int_distribution<std::int64_t> frame_of(0, vm.frames_per_session - 1);
    std::normal_distribution<double> pos_noise(0.0, 1.0);

    std::vector<ObjectInstance> instances(live.size());
    std::map<std::int64_t, std::vector<Observation>> by_frame;
    std::size_t view_counter = 0;
    for (std::size_t k = 0; k < live.size(); ++k) {
      const auto& obj = objs[live[k]];
      ObjectInstance inst;
      inst.instance_id = detail::numbered(prefix + "-i", numbers[k], 3);
      inst.semantic_class = obj.semantic_class;
      inst.position = obj.position;
      inst.position_history = {obj.position};
      const int nviews = view_count(view_rng);
      for (int v = 0; v < nviews; ++v) {
        ViewDescriptor d;
        d.view_id = detail::numbered(prefix + "-v", view_counter++, 5);
        d.frame_index = frame_of(view_rng);
        d.data = detail::sample_view(cats.at(obj.label), vm, view_rng);
        Observation ob;
        ob.view = d;
        ob.semantic_class = obj.semantic_class;
        for (int a = 0; a < 3; ++a)
          ob.position[a] = obj.position[a] + vm.position_noise * pos_noise(pos_rng);
        by_frame[d.frame_index].push_back(ob);
        st.view_owner[d.view_id] = inst.instance_id;
        inst.views.push_back(std::move(d));
      }
      st.instances[inst.instance_id] = {obj.physical_id, obj.semantic_class,
                                        obj.visual_type, obj.label};
      instance_of_physical[session][obj.physical_id] = inst.instance_id;
      instances[k] = std::move(inst);
    }
    std::sort(instances.begin(), instances.end(),
              [](const auto& a, const auto& b) { return a.instance_id < b.instance_id; });
    snap.instances = std::move(instances);

    std::vector<Frame> frames;
    for (std::int64_t f = 0; f < vm.frames_per_session; ++f) {
      Frame fr;
      fr.frame_index = f;
      if (auto it = by_frame.find(f); it != by_frame.end()) {
        fr.observations = std::move(it->second);
        std::sort(fr.observations.begin(), fr.observations.end(),
                  [](const auto& a, const auto& b) { return a.view.view_id < b.view.view_id; });
      }
      frames.push_back(std::move(fr));
    }
    out.snapshots.push_back(std::move(snap));
    out.frames.push_back(std::move(frames));
    truth.sessions.push_back(std::move(st));
  }

  for (std::size_t i = 0; i < before.size(); ++i) {
    const std::string& ref_id = instance_of_physical[0].at(before[i].physical_id);
    if (removed[i]) {
      truth.absent.push_back(ref_id);
    } else {
      truth.matched.push_back({ref_id, instance_of_physical[1].at(before[i].physical_id),
                               euclidean(before[i].position, after[i].position)});
    }
  }
  for (std::size_t i = before.size(); i < after.size(); ++i)
    truth.added.push_back(instance_of_physical[1].at(after[i].physical_id));
  std::sort(truth.matched.begin(), truth.matched.end(),
            [](const auto& a, const auto& b) { return a.ref_id < b.ref_id; });
  std::sort(truth.absent.begin(), truth.absent.end());
  std::sort(truth.added.begin(), truth.added.end());
  out.truth = std::move(truth);
  return out;
}

struct TrainingSplit {
  TripletDataset train;
  TripletDataset validation;
};

/// Views of `snapshot` labelled by ground-truth visual category, split per
/// label into train/validation (train keeps at least 2 views per label).
inline TrainingSplit make_training_set(const SceneSnapshot& snapshot,
                                       const SessionTruth& truth,
                                       double train_fraction = 0.85,
                                       std::uint64_t seed = 0) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw Error(ErrorKind::validation, "make_training_set: train_fraction in (0,1]");
  std::map<int, std::vector<const ViewDescriptor*>> by_label;
  std::size_t dim = 0;
  for (const auto& inst : snapshot.instances) {
    auto it = truth.instances.find(inst.instance_id);
    if (it == truth.instances.end())
      throw Error(ErrorKind::validation,
                  "make_training_set: no ground truth for " + inst.instance_id);
    for (const auto& v : inst.views) {
      by_label[it->second.label].push_back(&v);
      dim = v.data.size();
    }
  }
  TrainingSplit out;
  auto rng = detail::substream(seed, 0x5b1u);
  for (auto& [label, views] : by_label) {
    if (views.size() < 2)
      throw Error(ErrorKind::validation,
                  "make_training_set: category " + std::to_string(label) +
                      " has fewer than 2 views");
    std::shuffle(views.begin(), views.end(), rng);
    auto n_train = static_cast<std::size_t>(
        std::llround(train_fraction * static_cast<double>(views.size())));
    n_train = std::clamp<std::size_t>(n_train, 2, views.size());
    for (std::size_t k = 0; k < views.size(); ++k)
      (k < n_train ? out.train : out.validation).items.push_back({views[k]->data, label});
  }
  out.train.validate(dim);
  return out;
}

// Presets -------------------------------------------------------------------

namespace detail {

inline ChangeOp move_op(const std::string& cls, int type, int ordinal, double dx, double dy) {
  ChangeOp op;
  op.kind = ChangeOp::Kind::move;
  op.target = {cls, type, ordinal};
  op.displacement = {dx, dy, 0.0};
  return op;
}
inline ChangeOp remove_op(const std::string& cls, int type, int ordinal) {
  ChangeOp op;
  op.kind = ChangeOp::Kind::remove;
  op.target = {cls, type, ordinal};
  return op;
}
inline ChangeOp add_op(const std::string& cls, int type) {
  ChangeOp op;
  op.kind = ChangeOp::Kind::add;
  op.semantic_class = cls;
  op.visual_type = type;
  return op;
}

/// Small moves (0.1 to 0.45 m) for `fraction` of the surviving instances,
/// drawn from a fixed per-preset stream so the script is part of the preset.
inline void add_jitter_moves(ScenarioSpec& spec, double fraction, std::uint64_t stream) {
  std::set<std::tuple<std::string, int, int>> removed;
  for (const auto& op : spec.change_script)
    if (op.kind == ChangeOp::Kind::remove)
      removed.insert({op.target.semantic_class, op.target.visual_type, op.target.ordinal});
  std::mt19937_64 rng(stream);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& c : spec.categories)
    for (int k = 0; k < c.count; ++k) {
      if (removed.count({c.semantic_class, c.visual_type, k})) continue;
      const bool moves = unit(rng) < fraction;
      const double r = 0.1 + 0.35 * unit(rng);
      const double a = 2.0 * std::numbers::pi * unit(rng);
      if (moves)
        spec.change_script.push_back(
            move_op(c.semantic_class, c.visual_type, k, r * std::cos(a), r * std::sin(a)));
    }
}

}  // namespace detail

inline std::vector<std::string> preset_names() {
  return {"coffeeroom", "flat", "labfront", "studyhall"};
}

/// Scene compositions and change sets of the four evaluation scenes.
/// Geometry is synthesized.
inline ScenarioSpec preset(const std::string& name, std::uint64_t seed) {
  using detail::add_op;
  using detail::remove_op;
  ScenarioSpec s;
  s.name = name;
  s.seed = seed;
  if (name == "flat") {
    // Cups and plates are left out of this scene.
    s.categories = {{"chair", 1, 2},   {"table", 1, 1},   {"table", 2, 1},
                    {"picture", 1, 2}, {"picture", 2, 2}, {"bed", 1, 1},
                    {"picture", 3, 1}, {"picture", 4, 1}, {"picture", 5, 1},
                    {"lamp", 1, 1},    {"journal", 1, 1}, {"journal", 2, 1}};
    s.change_script = {remove_op("journal", 2, 0), remove_op("bed", 1, 0),
                       add_op("chair", 2),         add_op("journal", 3),
                       add_op("bed", 2),           add_op("table", 3),
                       add_op("laptop", 1),        add_op("coffee_machine", 1)};
    s.arena.max = {9, 7, 0};
    detail::add_jitter_moves(s, 0.6, 101);
  } else if (name == "labfront") {
    s.categories = {{"chair", 1, 15}, {"table", 1, 3}};
    s.change_script = {remove_op("chair", 1, 2), remove_op("chair", 1, 7),
                       remove_op("chair", 1, 11), add_op("chair", 2),
                       add_op("chair", 3),        add_op("chair", 4)};
    s.arena.max = {10, 8, 0};
    detail::add_jitter_moves(s, 0.5, 202);
  } else if (name == "coffeeroom") {
    s.categories = {{"chair", 1, 7}, {"chair", 2, 1}, {"chair", 3, 2}, {"table", 1, 1},
                    {"table", 2, 1}, {"table", 3, 1}, {"couch", 1, 2}};
    s.change_script = {remove_op("chair", 1, 3), remove_op("chair", 3, 1),
                       add_op("chair", 4), add_op("chair", 5)};
    s.arena.max = {8, 7, 0};
    detail::add_jitter_moves(s, 0.7, 303);
  } else if (name == "studyhall") {
    s.categories = {{"chair", 1, 25}, {"chair", 2, 3},  {"chair", 3, 2},
                    {"table", 1, 10}, {"table", 2, 1}, {"couch", 1, 2}};
    s.change_script = {remove_op("chair", 2, 0), remove_op("chair", 3, 0),
                       remove_op("chair", 3, 1), remove_op("table", 1, 4),
                       remove_op("couch", 1, 1), add_op("chair", 1),
                       add_op("chair", 1),        add_op("chair", 4)};
    s.arena.max = {14, 12, 0};
    detail::add_jitter_moves(s, 0.6, 404);
  } else {
    std::string list;
    for (const auto& n : preset_names()) list += (list.empty() ? "" : ", ") + n;
    throw Error(ErrorKind::usage, "unknown preset '" + name + "' (available: " + list + ")");
  }
  return s;
}

// JSON ----------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const ChangeOp& op) {
  switch (op.kind) {
    case ChangeOp::Kind::move:
      j = {{"op", "move"},
           {"target", {{"semantic_class", op.target.semantic_class},
                       {"visual_type", op.target.visual_type},
                       {"ordinal", op.target.ordinal}}},
           {"displacement", op.displacement}};
      break;
    case ChangeOp::Kind::remove:
      j = {{"op", "remove"},
           {"target", {{"semantic_class", op.target.semantic_class},
                       {"visual_type", op.target.visual_type},
                       {"ordinal", op.target.ordinal}}}};
      break;
    case ChangeOp::Kind::add:
      j = {{"op", "add"}, {"semantic_class", op.semantic_class}, {"visual_type", op.visual_type}};
      if (op.position) j["position"] = *op.position;
      break;
  }
}

inline void from_json(const nlohmann::json& j, ChangeOp& op) {
  const std::string kind = j.at("op").get<std::string>();
  auto target = [&]() {
    const auto& t = j.at("target");
    return Selector{t.at("semantic_class").get<std::string>(), t.value("visual_type", 1),
                    t.value("ordinal", 0)};
  };
  if (kind == "move") {
    op.kind = ChangeOp::Kind::move;
    op.target = target();
    j.at("displacement").get_to(op.displacement);
  } else if (kind == "remove") {
    op.kind = ChangeOp::Kind::remove;
    op.target = target();
  } else if (kind == "add") {
    op.kind = ChangeOp::Kind::add;
    j.at("semantic_class").get_to(op.semantic_class);
    op.visual_type = j.value("visual_type", 1);
    if (j.contains("position")) op.position = j.at("position").get<Vec3>();
  } else {
    throw Error(ErrorKind::validation, "unknown change op '" + kind + "'");
  }
}

inline void to_json(nlohmann::json& j, const ScenarioSpec& s) {
  const auto& v = s.view_model;
  nlohmann::json cats = nlohmann::json::array();
  for (const auto& c : s.categories)
    cats.push_back({{"semantic_class", c.semantic_class},
                    {"visual_type", c.visual_type},
                    {"count", c.count}});
  j = {{"schema_version", kScenarioSchemaVersion},
       {"name", s.name},
       {"seed", s.seed},
       {"categories", cats},
       {"change_script", s.change_script},
       {"view_model",
        {{"views_min", v.views_min},
         {"views_max", v.views_max},
         {"mode", v.mode == DescriptorMode::patch ? "patch" : "abstract"},
         {"descriptor_dim", v.descriptor_dim},
         {"patch", {v.patch_height, v.patch_width, v.patch_channels}},
         {"noise", v.noise},
         {"viewpoint", v.viewpoint},
         {"occlusion", v.occlusion},
         {"position_noise", v.position_noise},
         {"frames_per_session", v.frames_per_session}}},
       {"arena",
        {{"min", s.arena.min}, {"max", s.arena.max}, {"min_separation", s.arena.min_separation}}}};
}

inline void from_json(const nlohmann::json& j, ScenarioSpec& s) {
  const int version = j.value("schema_version", kScenarioSchemaVersion);
  if (version != kScenarioSchemaVersion)
    throw Error(ErrorKind::validation,
                "scenario schema_version " + std::to_string(version) + " unsupported");
  s = ScenarioSpec{};
  s.name = j.value("name", std::string("custom"));
  s.seed = j.value("seed", std::uint64_t{0});
  for (const auto& c : j.at("categories"))
    s.categories.push_back({c.at("semantic_class").get<std::string>(), c.value("visual_type", 1),
                            c.value("count", 1)});
  if (j.contains("change_script")) j.at("change_script").get_to(s.change_script);
  if (j.contains("view_model")) {
    const auto& v = j.at("view_model");
    auto& vm = s.view_model;
    vm.views_min = v.value("views_min", vm.views_min);
    vm.views_max = v.value("views_max", vm.views_max);
    vm.mode = v.value("mode", std::string("abstract")) == "patch" ? DescriptorMode::patch
                                                                 : DescriptorMode::abstract;
    vm.descriptor_dim = v.value("descriptor_dim", vm.descriptor_dim);
    if (v.contains("patch")) {
      const auto p = v.at("patch").get<std::vector<std::size_t>>();
      if (p.size() != 3) throw Error(ErrorKind::validation, "view_model.patch needs [h,w,c]");
      vm.patch_height = p[0];
      vm.patch_width = p[1];
      vm.patch_channels = p[2];
    }
    vm.noise = v.value("noise", vm.noise);
    vm.viewpoint = v.value("viewpoint", vm.viewpoint);
    vm.occlusion = v.value("occlusion", vm.occlusion);
    vm.position_noise = v.value("position_noise", vm.position_noise);
    vm.frames_per_session = v.value("frames_per_session", vm.frames_per_session);
  }
  if (j.contains("arena")) {
    const auto& a = j.at("arena");
    s.arena.min = a.value("min", s.arena.min);
    s.arena.max = a.value("max", s.arena.max);
    s.arena.min_separation = a.value("min_separation", s.arena.min_separation);
  }
}

inline void to_json(nlohmann::json& j, const Observation& o) {
  j = {{"view", o.view}, {"semantic_class", o.semantic_class}, {"position", o.position}};
}
inline void from_json(const nlohmann::json& j, Observation& o) {
  j.at("view").get_to(o.view);
  j.at("semantic_class").get_to(o.semantic_class);
  j.at("position").get_to(o.position);
}
inline void to_json(nlohmann::json& j, const Frame& f) {
  j = {{"frame_index", f.frame_index}, {"observations", f.observations}};
}
inline void from_json(const nlohmann::json& j, Frame& f) {
  j.at("frame_index").get_to(f.frame_index);
  j.at("observations").get_to(f.observations);
}

inline void to_json(nlohmann::json& j, const GroundTruth& g) {
  nlohmann::json sessions = nlohmann::json::array();
  for (const auto& s : g.sessions) {
    nlohmann::json inst = nlohmann::json::object();
    for (const auto& [id, t] : s.instances)
      inst[id] = {{"physical_id", t.physical_id},
                  {"semantic_class", t.semantic_class},
                  {"visual_type", t.visual_type},
                  {"label", t.label}};
    sessions.push_back({{"session_id", s.session_id}, {"instances", inst}, {"view_owner", s.view_owner}});
  }
  nlohmann::json matched = nlohmann::json::array();
  for (const auto& m : g.matched)
    matched.push_back({{"ref_instance_id", m.ref_id},
                       {"cur_instance_id", m.cur_id},
                       {"displacement", m.displacement}});
  nlohmann::json names = nlohmann::json::object();
  for (const auto& [label, name] : g.label_names) names[std::to_string(label)] = name;
  j = {{"schema_version", kScenarioSchemaVersion},
       {"sessions", sessions},
       {"matched", matched},
       {"absent", g.absent},
       {"new", g.added},
       {"label_names", names}};
}

inline void from_json(const nlohmann::json& j, GroundTruth& g) {
  g = GroundTruth{};
  for (const auto& s : j.at("sessions")) {
    SessionTruth st;
    s.at("session_id").get_to(st.session_id);
    for (const auto& [id, t] : s.at("instances").items())
      st.instances[id] = {t.at("physical_id").get<std::string>(),
                          t.at("semantic_class").get<std::string>(),
                          t.at("visual_type").get<int>(), t.at("label").get<int>()};
    s.at("view_owner").get_to(st.view_owner);
    g.sessions.push_back(std::move(st));
  }
  for (const auto& m : j.at("matched"))
    g.matched.push_back({m.at("ref_instance_id").get<std::string>(),
                         m.at("cur_instance_id").get<std::string>(),
                         m.at("displacement").get<double>()});
  j.at("absent").get_to(g.absent);
  j.at("new").get_to(g.added);
  for (const auto& [k, v] : j.at("label_names").items()) g.label_names[std::stoi(k)] = v.get<std::string>();
}

/// Newline-delimited JSON, one frame per line.
inline std::string frames_to_ndjson(const std::vector<Frame>& frames) {
  std::string out;
  for (const auto& f : frames) out += nlohmann::json(f).dump() + "\n";
  return out;
}

inline std::vector<Frame> frames_from_ndjson(std::istream& in) {
  std::vector<Frame> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line).get<Frame>());
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::validation,
                  "frame stream line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace react
