#pragma once

// Object layer of a scene graph: instances with view memories and position
// histories, clusters of visually identical instances, and the
// matched/absent/new change report between two sessions.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "react/common.hpp"

namespace react {

struct ViewDescriptor {
  std::string view_id;
  Vector data;
  std::int64_t frame_index = 0;

  bool operator==(const ViewDescriptor&) const = default;
};

struct ObjectInstance {
  std::string instance_id;
  std::string semantic_class;
  Vec3 position{0.0, 0.0, 0.0};
  std::vector<Vec3> position_history;
  std::vector<ViewDescriptor> views;

  bool operator==(const ObjectInstance&) const = default;
};

struct InstanceCluster {
  std::string cluster_id;
  std::string semantic_class;
  /// Sorted instance ids.
  std::vector<std::string> members;
  Vector embedding;
  /// View ids of all members, in member order.
  std::vector<std::string> view_library;

  bool operator==(const InstanceCluster&) const = default;
};

/// A snapshot with no clusters is "unclustered"; once clusters exist they
/// must partition the instances.
struct SceneSnapshot {
  std::string session_id;
  std::int64_t time_index = 0;
  std::vector<ObjectInstance> instances;
  std::vector<InstanceCluster> clusters;

  bool operator==(const SceneSnapshot&) const = default;

  bool clustered() const noexcept { return !clusters.empty() || instances.empty(); }

  const ObjectInstance* find(const std::string& id) const {
    for (const auto& inst : instances)
      if (inst.instance_id == id) return &inst;
    return nullptr;
  }

  std::set<std::string> instance_ids() const {
    std::set<std::string> ids;
    for (const auto& inst : instances) ids.insert(inst.instance_id);
    return ids;
  }
};

struct MatchedPair {
  std::string ref_id;
  std::string cur_id;
  double travel_distance = 0.0;

  bool operator==(const MatchedPair&) const = default;
};

struct ChangeReport {
  std::vector<MatchedPair> matched;
  /// Sorted reference instance ids that did not reappear.
  std::vector<std::string> absent;
  /// Sorted current instance ids with no reference counterpart.
  std::vector<std::string> added;
  double total_distance = 0.0;

  bool operator==(const ChangeReport&) const = default;
};

struct Violation {
  std::string code;
  std::string detail;
};

/// Every invariant violation found in `s`; empty means valid.
inline std::vector<Violation> validate_snapshot(const SceneSnapshot& s) {
  std::vector<Violation> out;
  auto add = [&](std::string code, std::string detail) {
    out.push_back({std::move(code), std::move(detail)});
  };

  std::set<std::string> ids;
  std::set<std::string> view_ids;
  std::size_t descriptor_dim = 0;
  bool have_dim = false;

  for (const auto& inst : s.instances) {
    if (!ids.insert(inst.instance_id).second)
      add("duplicate_instance_id", inst.instance_id);

    bool finite = all_finite(inst.position);
    for (const auto& p : inst.position_history) finite = finite && all_finite(p);
    if (!finite) {
      add("non_finite_coordinate", inst.instance_id);
    } else if (inst.position_history.empty()) {
      add("empty_position_history", inst.instance_id);
    } else if (inst.position_history.back() != inst.position) {
      add("position_history_mismatch", inst.instance_id);
    }

    for (const auto& v : inst.views) {
      if (!view_ids.insert(v.view_id).second)
        add("duplicate_view_id", v.view_id);
      if (!have_dim) {
        descriptor_dim = v.data.size();
        have_dim = true;
      } else if (v.data.size() != descriptor_dim) {
        add("descriptor_dimension", v.view_id);
      }
      if (!all_finite(v.data)) add("non_finite_descriptor", v.view_id);
      if (v.frame_index < 0) add("negative_frame_index", v.view_id);
    }
  }

  if (s.clusters.empty()) return out;

  std::map<std::string, int> membership;
  std::set<std::string> cluster_ids;
  for (const auto& c : s.clusters) {
    if (!cluster_ids.insert(c.cluster_id).second)
      add("duplicate_cluster_id", c.cluster_id);
    if (c.members.empty()) add("empty_cluster", c.cluster_id);
    std::size_t views = 0;
    for (const auto& m : c.members) {
      ++membership[m];
      const ObjectInstance* inst = s.find(m);
      if (inst == nullptr) {
        add("unknown_member", c.cluster_id + ":" + m);
        continue;
      }
      views += inst->views.size();
      if (inst->semantic_class != c.semantic_class)
        add("mixed_semantic_class", c.cluster_id + ":" + m);
    }
    if (!all_finite(c.embedding)) add("non_finite_embedding", c.cluster_id);
    if (c.view_library.size() != views) add("view_library_size", c.cluster_id);
  }
  for (const auto& id : ids) {
    auto it = membership.find(id);
    if (it == membership.end() || it->second != 1)
      add("partition_violated", id);
  }
  return out;
}

/// Throws ErrorKind::validation when `report` does not partition the
/// instance sets of `ref` and `cur`.
inline void check_report_consistency(const SceneSnapshot& ref,
                                     const SceneSnapshot& cur,
                                     const ChangeReport& report) {
  auto fail = [](const std::string& what) {
    throw Error(ErrorKind::validation, "report/snapshot mismatch: " + what);
  };
  std::multiset<std::string> ref_side(report.absent.begin(), report.absent.end());
  std::multiset<std::string> cur_side(report.added.begin(), report.added.end());
  for (const auto& m : report.matched) {
    ref_side.insert(m.ref_id);
    cur_side.insert(m.cur_id);
  }
  const auto ref_ids = ref.instance_ids();
  const auto cur_ids = cur.instance_ids();
  if (ref_side.size() != ref_ids.size() ||
      !std::equal(ref_side.begin(), ref_side.end(), ref_ids.begin()))
    fail("matched reference side and absent set do not partition the "
         "reference instances");
  if (cur_side.size() != cur_ids.size() ||
      !std::equal(cur_side.begin(), cur_side.end(), cur_ids.begin()))
    fail("matched current side and new set do not partition the current "
         "instances");
}

/// Next-session snapshot: matched reference instances keep their identity,
/// merge the current views and append the current position; absent ones are
/// dropped; new ones are copied. The result is unclustered.
inline SceneSnapshot apply_change_report(const SceneSnapshot& ref,
                                         const SceneSnapshot& cur,
                                         const ChangeReport& report) {
  check_report_consistency(ref, cur, report);

  std::unordered_map<std::string, const ObjectInstance*> cur_by_id;
  for (const auto& inst : cur.instances) cur_by_id[inst.instance_id] = &inst;
  std::unordered_map<std::string, std::string> match_of;
  for (const auto& m : report.matched) match_of[m.ref_id] = m.cur_id;

  SceneSnapshot out;
  out.session_id = cur.session_id;
  out.time_index = cur.time_index;

  for (const auto& inst : ref.instances) {
    auto it = match_of.find(inst.instance_id);
    if (it == match_of.end()) continue;
    const ObjectInstance& seen = *cur_by_id.at(it->second);
    ObjectInstance next = inst;
    next.position = seen.position;
    next.position_history.push_back(seen.position);
    std::set<std::string> have;
    for (const auto& v : next.views) have.insert(v.view_id);
    for (const auto& v : seen.views)
      if (have.insert(v.view_id).second) next.views.push_back(v);
    out.instances.push_back(std::move(next));
  }
  for (const auto& id : report.added) out.instances.push_back(*cur_by_id.at(id));
  return out;
}

// JSON -----------------------------------------------------------------------

inline void to_json(nlohmann::json& j, const ViewDescriptor& v) {
  j = {{"view_id", v.view_id}, {"frame_index", v.frame_index}, {"data", v.data}};
}
inline void from_json(const nlohmann::json& j, ViewDescriptor& v) {
  j.at("view_id").get_to(v.view_id);
  j.at("frame_index").get_to(v.frame_index);
  j.at("data").get_to(v.data);
}

inline void to_json(nlohmann::json& j, const ObjectInstance& o) {
  j = {{"instance_id", o.instance_id},
       {"semantic_class", o.semantic_class},
       {"position", o.position},
       {"position_history", o.position_history},
       {"views", o.views}};
}
inline void from_json(const nlohmann::json& j, ObjectInstance& o) {
  j.at("instance_id").get_to(o.instance_id);
  j.at("semantic_class").get_to(o.semantic_class);
  j.at("position").get_to(o.position);
  j.at("position_history").get_to(o.position_history);
  j.at("views").get_to(o.views);
}

inline void to_json(nlohmann::json& j, const InstanceCluster& c) {
  j = {{"cluster_id", c.cluster_id},
       {"semantic_class", c.semantic_class},
       {"members", c.members},
       {"embedding", c.embedding}};
}
inline void from_json(const nlohmann::json& j, InstanceCluster& c) {
  j.at("cluster_id").get_to(c.cluster_id);
  j.at("semantic_class").get_to(c.semantic_class);
  j.at("members").get_to(c.members);
  j.at("embedding").get_to(c.embedding);
}

inline void to_json(nlohmann::json& j, const SceneSnapshot& s) {
  j = {{"session_id", s.session_id},
       {"time_index", s.time_index},
       {"instances", s.instances},
       {"clusters", s.clusters}};
}

/// The view library is not serialized; it is rebuilt from the members.
inline void from_json(const nlohmann::json& j, SceneSnapshot& s) {
  j.at("session_id").get_to(s.session_id);
  j.at("time_index").get_to(s.time_index);
  j.at("instances").get_to(s.instances);
  j.at("clusters").get_to(s.clusters);
  for (auto& c : s.clusters) {
    c.view_library.clear();
    for (const auto& m : c.members)
      if (const ObjectInstance* inst = s.find(m))
        for (const auto& v : inst->views) c.view_library.push_back(v.view_id);
  }
}

inline void to_json(nlohmann::json& j, const MatchedPair& m) {
  j = {{"ref_instance_id", m.ref_id},
       {"cur_instance_id", m.cur_id},
       {"travel_distance", m.travel_distance}};
}
inline void from_json(const nlohmann::json& j, MatchedPair& m) {
  j.at("ref_instance_id").get_to(m.ref_id);
  j.at("cur_instance_id").get_to(m.cur_id);
  j.at("travel_distance").get_to(m.travel_distance);
}

inline void to_json(nlohmann::json& j, const ChangeReport& r) {
  j = {{"matched", r.matched},
       {"absent", r.absent},
       {"new", r.added},
       {"total_distance", r.total_distance}};
}
inline void from_json(const nlohmann::json& j, ChangeReport& r) {
  j.at("matched").get_to(r.matched);
  j.at("absent").get_to(r.absent);
  j.at("new").get_to(r.added);
  j.at("total_distance").get_to(r.total_distance);
}

/// Parses `text` as T, converting parse and schema errors to react::Error.
template <typename T>
T parse_json_as(const std::string& text, const std::string& what) {
  try {
    return nlohmann::json::parse(text).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::validation, what + ": " + e.what());
  }
}

inline SceneSnapshot load_snapshot(const std::string& path) {
  return parse_json_as<SceneSnapshot>(read_text_file(path), path);
}
inline void save_snapshot(const std::string& path, const SceneSnapshot& s) {
  write_text_file(path, nlohmann::json(s).dump(1) + "\n");
}
inline ChangeReport load_report(const std::string& path) {
  return parse_json_as<ChangeReport>(read_text_file(path), path);
}
inline void save_report(const std::string& path, const ChangeReport& r) {
  write_text_file(path, nlohmann::json(r).dump(1) + "\n");
}

}  // namespace react
