#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "react/scenegen.hpp"

using namespace react;

namespace {

std::multiset<std::string> category_names(const GroundTruth& t, int session,
                                          const std::vector<std::string>& ids) {
  std::multiset<std::string> out;
  for (const auto& id : ids) {
    const auto& it = t.sessions[session].instances.at(id);
    out.insert(category_name(it.semantic_class, it.visual_type));
  }
  return out;
}

ChangeReport truth_report(const GroundTruth& t) {
  ChangeReport r;
  for (const auto& m : t.matched) r.matched.push_back({m.ref_id, m.cur_id, m.displacement});
  r.absent = t.absent;
  r.added = t.added;
  return r;
}

// Fraction of views whose nearest prototype is their own category's.
double prototype_hit_rate(const ScenarioSpec& spec) {
  const Scenario sc = generate(spec);
  std::map<int, Vector> proto;
  for (const auto& [label, name] : sc.truth.label_names)
    proto[label] = detail::make_category(spec.view_model, spec.seed, label).prototype;
  std::size_t hits = 0, total = 0;
  for (int s = 0; s < 2; ++s)
    for (const auto& inst : sc.snapshots[s].instances) {
      const int own = sc.truth.sessions[s].instances.at(inst.instance_id).label;
      for (const auto& v : inst.views) {
        const double d_own = squared_distance(v.data, proto.at(own));
        bool ok = true;
        for (const auto& [label, p] : proto)
          if (label != own && squared_distance(v.data, p) <= d_own) ok = false;
        hits += ok;
        ++total;
      }
    }
  return static_cast<double>(hits) / total;
}

}  // namespace

TEST(Generate, EmptyChangeScriptMatchesEverythingInPlace) {
  ScenarioSpec s;
  s.seed = 4;
  s.categories = {{"chair", 1, 5}, {"table", 1, 2}};
  const Scenario sc = generate(s);
  EXPECT_EQ(sc.truth.matched.size(), 7u);
  EXPECT_TRUE(sc.truth.absent.empty());
  EXPECT_TRUE(sc.truth.added.empty());
  for (const auto& m : sc.truth.matched) {
    EXPECT_EQ(m.displacement, 0.0);
    EXPECT_EQ(sc.snapshots[0].find(m.ref_id)->position, sc.snapshots[1].find(m.cur_id)->position);
  }
}

TEST(Generate, MovesAreApplied) {
  ScenarioSpec s;
  s.seed = 2;
  s.categories = {{"chair", 1, 3}};
  s.change_script = {detail::move_op("chair", 1, 1, 0.3, -0.4)};
  const Scenario sc = generate(s);
  int moved = 0;
  for (const auto& m : sc.truth.matched) {
    if (m.displacement == 0.0) continue;
    ++moved;
    EXPECT_NEAR(m.displacement, 0.5, 1e-12);
    EXPECT_NEAR(euclidean(sc.snapshots[0].find(m.ref_id)->position, sc.snapshots[1].find(m.cur_id)->position), 0.5, 1e-12);
  }
  EXPECT_EQ(moved, 1);
}

TEST(Generate, DeterministicPerSeed) {
  for (const auto& name : preset_names()) {
    const Scenario a = generate(preset(name, 9)), b = generate(preset(name, 9));
    EXPECT_EQ(a.snapshots, b.snapshots);
    EXPECT_EQ(a.frames, b.frames);
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_EQ(frames_to_ndjson(a.frames[1]), frames_to_ndjson(b.frames[1]));
    EXPECT_NE(generate(preset(name, 10)).snapshots, a.snapshots);
  }
}

TEST(Generate, TruthIsAValidReport) {
  for (const auto& name : preset_names())
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const Scenario sc = generate(preset(name, seed));
      EXPECT_NO_THROW(check_report_consistency(sc.snapshots[0], sc.snapshots[1], truth_report(sc.truth)));
      for (const auto& m : sc.truth.matched) {
        const auto& a = sc.truth.sessions[0].instances.at(m.ref_id);
        const auto& b = sc.truth.sessions[1].instances.at(m.cur_id);
        EXPECT_EQ(a.physical_id, b.physical_id);
        EXPECT_EQ(a.label, b.label);
      }
    }
}

TEST(Generate, ArenaCapacityExceeded) {
  ScenarioSpec s;
  s.categories = {{"chair", 1, 40}};
  s.arena.max = {2, 2, 0};
  try {
    generate(s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
  }
}

TEST(Generate, MinimumSeparationHolds) {
  const Scenario sc = generate(preset("studyhall", 5));
  const auto& in = sc.snapshots[0].instances;
  for (std::size_t i = 0; i < in.size(); ++i)
    for (std::size_t j = i + 1; j < in.size(); ++j)
      EXPECT_GE(euclidean(in[i].position, in[j].position), 1.0);
}

TEST(Generate, SpecValidation) {
  ScenarioSpec s;
  EXPECT_THROW(generate(s), Error);
  s.categories = {{"chair", 1, 0}};
  EXPECT_THROW(generate(s), Error);
  s.categories = {{"chair", 1, 2}};
  s.view_model.occlusion = 1.0;
  EXPECT_THROW(generate(s), Error);
  s.view_model.occlusion = 0.1;
  s.change_script = {detail::remove_op("chair", 1, 5)};
  EXPECT_THROW(generate(s), Error);
  s.change_script.clear();
  s.view_model.mode = DescriptorMode::patch;
  s.view_model.descriptor_dim = 100;
  EXPECT_THROW(generate(s), Error);
  s.view_model.descriptor_dim = 8 * 8 * 3;
  EXPECT_NO_THROW(generate(s));
}

TEST(Generate, ViewsAndFramesAgree) {
  const Scenario sc = generate(preset("coffeeroom", 3));
  for (int s = 0; s < 2; ++s) {
    std::map<std::string, const ViewDescriptor*> views;
    for (const auto& inst : sc.snapshots[s].instances) {
      EXPECT_GE(inst.views.size(), 12u);
      EXPECT_LE(inst.views.size(), 20u);
      for (const auto& v : inst.views) views[v.view_id] = &v;
    }
    std::size_t seen = 0;
    double err2 = 0.0;
    ASSERT_EQ(sc.frames[s].size(), 40u);
    for (const auto& f : sc.frames[s])
      for (const auto& ob : f.observations) {
        ++seen;
        const ViewDescriptor* v = views.at(ob.view.view_id);
        EXPECT_EQ(*v, ob.view);
        EXPECT_EQ(v->frame_index, f.frame_index);
        const std::string& owner = sc.truth.sessions[s].view_owner.at(v->view_id);
        const ObjectInstance* inst = sc.snapshots[s].find(owner);
        EXPECT_EQ(inst->semantic_class, ob.semantic_class);
        for (int a = 0; a < 3; ++a) err2 += std::pow(ob.position[a] - inst->position[a], 2);
      }
    EXPECT_EQ(seen, views.size());
    const double sigma = std::sqrt(err2 / (3.0 * seen));
    EXPECT_NEAR(sigma, 0.02, 0.003);
  }
}

TEST(Generate, FramesCarryNoInstanceIds) {
  const Scenario sc = generate(preset("labfront", 2));
  for (int s = 0; s < 2; ++s) {
    const std::string text = frames_to_ndjson(sc.frames[s]);
    for (const auto& [id, t] : sc.truth.sessions[s].instances) {
      EXPECT_EQ(text.find(id), std::string::npos) << id;
      EXPECT_EQ(text.find("\"" + t.physical_id + "\""), std::string::npos);
    }
    const auto j = nlohmann::json::parse(text.substr(0, text.find('\n')));
    for (const auto& ob : j.at("observations")) {
      std::set<std::string> keys;
      for (const auto& [key, value] : ob.items()) keys.insert(key);
      EXPECT_EQ(keys, (std::set<std::string>{"position", "semantic_class", "view"}));
    }
  }
}

TEST(Generate, FrameStreamRoundTrip) {
  const Scenario sc = generate(preset("flat", 1));
  std::istringstream in(frames_to_ndjson(sc.frames[1]));
  EXPECT_EQ(frames_from_ndjson(in), sc.frames[1]);
  std::istringstream bad("{\"frame_index\": 0}\nnot json\n");
  EXPECT_THROW(frames_from_ndjson(bad), Error);
}

TEST(Generate, ScenarioSpecJsonRoundTrip) {
  const ScenarioSpec s = preset("studyhall", 12);
  const ScenarioSpec back = nlohmann::json::parse(nlohmann::json(s).dump()).get<ScenarioSpec>();
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(s));
  EXPECT_EQ(generate(back).truth, generate(s).truth);
  const nlohmann::json g = generate(s).truth;
  EXPECT_EQ(g.get<GroundTruth>(), generate(s).truth);
}

TEST(Generate, PrototypeClosenessWithinNoiseBound) {
  // Default view model: viewpoint 0.3, occlusion 0.1, 192 dims.
  for (const auto& name : preset_names()) {
    ScenarioSpec s = preset(name, 6);
    EXPECT_EQ(prototype_hit_rate(s), 1.0) << name;
    s.view_model.noise = 1.0;
    EXPECT_EQ(prototype_hit_rate(s), 1.0) << name << " at the noise bound";
  }
}

TEST(Presets, StudyhallHas43Objects) {
  const Scenario sc = generate(preset("studyhall", 1));
  EXPECT_EQ(sc.snapshots[0].instances.size(), 43u);
  EXPECT_EQ(sc.truth.absent.size(), 5u);
  EXPECT_EQ(sc.truth.added.size(), 3u);
}

TEST(Presets, CoffeeroomChangeSets) {
  const Scenario sc = generate(preset("coffeeroom", 1));
  EXPECT_EQ(category_names(sc.truth, 1, sc.truth.added),
            (std::multiset<std::string>{"chair(4)", "chair(5)"}));
  EXPECT_EQ(category_names(sc.truth, 0, sc.truth.absent),
            (std::multiset<std::string>{"chair(1)", "chair(3)"}));
  EXPECT_EQ(sc.snapshots[0].instances.size(), 15u);
}

TEST(Presets, LabfrontChangeSets) {
  const Scenario sc = generate(preset("labfront", 1));
  EXPECT_EQ(sc.snapshots[0].instances.size(), 18u);
  EXPECT_EQ(sc.truth.absent.size(), 3u);
  EXPECT_EQ(sc.truth.added.size(), 3u);
  EXPECT_EQ(category_names(sc.truth, 0, sc.truth.absent),
            (std::multiset<std::string>{"chair(1)", "chair(1)", "chair(1)"}));
  EXPECT_EQ(category_names(sc.truth, 1, sc.truth.added),
            (std::multiset<std::string>{"chair(2)", "chair(3)", "chair(4)"}));
}

TEST(Presets, FlatExcludesCupsAndPlates) {
  const Scenario sc = generate(preset("flat", 1));
  for (const auto& snap : sc.snapshots)
    for (const auto& i : snap.instances) {
      EXPECT_NE(i.semantic_class, "cup");
      EXPECT_NE(i.semantic_class, "plate");
    }
  EXPECT_EQ(category_names(sc.truth, 1, sc.truth.added),
            (std::multiset<std::string>{"chair(2)", "journal(3)", "bed(2)", "table(3)", "laptop(1)",
                                        "coffee_machine(1)"}));
  EXPECT_EQ(category_names(sc.truth, 0, sc.truth.absent),
            (std::multiset<std::string>{"journal(2)", "bed(1)"}));
}

TEST(Presets, UnknownNameIsUsageError) {
  try {
    preset("kitchen", 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::usage);
    EXPECT_NE(std::string(e.what()).find("labfront"), std::string::npos);
  }
}

TEST(TrainingSet, FlatLabelCountAndSplit) {
  const Scenario sc = generate(preset("flat", 3));
  const TrainingSplit split = make_training_set(sc.snapshots[0], sc.truth.sessions[0], 0.85, 3);
  const auto tr = split.train.by_label(), va = split.validation.by_label();
  EXPECT_EQ(tr.size(), 12u);
  std::size_t views = 0;
  for (const auto& i : sc.snapshots[0].instances) views += i.views.size();
  EXPECT_EQ(split.train.items.size() + split.validation.items.size(), views);
  for (const auto& [label, idx] : tr) {
    EXPECT_GE(idx.size(), 2u);
    const std::size_t n = idx.size() + (va.count(label) ? va.at(label).size() : 0);
    EXPECT_NEAR(static_cast<double>(idx.size()), 0.85 * n, 0.5 + 1e-9);
  }
  const TrainingSplit again = make_training_set(sc.snapshots[0], sc.truth.sessions[0], 0.85, 3);
  ASSERT_EQ(again.train.items.size(), split.train.items.size());
  for (std::size_t k = 0; k < again.train.items.size(); ++k)
    EXPECT_EQ(again.train.items[k].descriptor, split.train.items[k].descriptor);
}

TEST(TrainingSet, SingleCategoryRejected) {
  ScenarioSpec s;
  s.categories = {{"chair", 1, 4}};
  const Scenario sc = generate(s);
  EXPECT_THROW(make_training_set(sc.snapshots[0], sc.truth.sessions[0]), Error);
  EXPECT_THROW(make_training_set(sc.snapshots[0], sc.truth.sessions[0], 0.0), Error);
  SessionTruth empty;
  EXPECT_THROW(make_training_set(sc.snapshots[0], empty), Error);
}
