#pragma once

// Cross-session change detection. Clusters are paired per semantic class by
// visual difference; instances inside each cluster pair are assigned by
// minimum total travel distance. The greedy baseline skips clustering and
// pairs nodes by ascending visual difference.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "react/assignment.hpp"
#include "react/clustering.hpp"
#include "react/scene_model.hpp"

namespace react {

enum class DistanceKind { euclidean };

struct MatchConfig {
  double gamma = 0.0;
  DistanceKind distance = DistanceKind::euclidean;

  void validate() const {
    if (!(gamma >= 0.0))
      throw Error(ErrorKind::validation, "MatchConfig: gamma must be >= 0");
  }
};

inline double travel_distance(const Vec3& from, const Vec3& to, DistanceKind kind) {
  switch (kind) {
    case DistanceKind::euclidean: return euclidean(from, to);
  }
  return euclidean(from, to);
}

/// Most recent known position of a reference instance.
inline const Vec3& latest_position(const ObjectInstance& inst) {
  return inst.position_history.empty() ? inst.position : inst.position_history.back();
}

namespace detail {

inline void require_clustered(const SceneSnapshot& s, const char* which) {
  if (!s.clustered())
    throw Error(ErrorKind::validation,
                std::string(which) + " snapshot '" + s.session_id +
                    "' is not clustered");
}

inline std::map<std::string, std::vector<const InstanceCluster*>> clusters_by_class(
    const SceneSnapshot& s) {
  std::map<std::string, std::vector<const InstanceCluster*>> out;
  for (const auto& c : s.clusters) out[c.semantic_class].push_back(&c);
  return out;
}

}  // namespace detail

/// Same-class cluster pairs with visual difference <= gamma, chosen to
/// maximize the number of pairs and then minimize their summed difference.
inline std::vector<std::pair<std::string, std::string>> match_clusters(
    const SceneSnapshot& ref, const SceneSnapshot& cur, const MatchConfig& config) {
  config.validate();
  detail::require_clustered(ref, "reference");
  detail::require_clustered(cur, "current");
  const auto ref_by = detail::clusters_by_class(ref);
  const auto cur_by = detail::clusters_by_class(cur);

  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [cls, rc] : ref_by) {
    auto it = cur_by.find(cls);
    if (it == cur_by.end()) continue;
    const auto& cc = it->second;
    CostMatrix cost(rc.size(), cc.size());
    for (std::size_t i = 0; i < rc.size(); ++i)
      for (std::size_t j = 0; j < cc.size(); ++j) {
        const double v = visual_difference(*rc[i], *cc[j]);
        cost(i, j) = v <= config.gamma ? v : kForbidden;
      }
    for (const auto& [i, j] : solve_lsa_partial(cost).pairs)
      out.emplace_back(rc[i]->cluster_id, cc[j]->cluster_id);
  }
  return out;
}

struct InstanceMatch {
  std::vector<MatchedPair> pairs;
  std::vector<std::string> absent;
  std::vector<std::string> added;
};

/// Minimum total travel distance assignment between the members of two
/// matched clusters. The smaller side is fully assigned; surplus reference
/// members are absent and surplus current members are new.
inline InstanceMatch match_instances(const InstanceCluster& ref_cluster,
                                     const SceneSnapshot& ref,
                                     const InstanceCluster& cur_cluster,
                                     const SceneSnapshot& cur,
                                     const MatchConfig& config) {
  std::vector<const ObjectInstance*> r, c;
  for (const auto& id : ref_cluster.members) {
    const ObjectInstance* inst = ref.find(id);
    if (inst == nullptr)
      throw Error(ErrorKind::validation, "match_instances: unknown ref member " + id);
    r.push_back(inst);
  }
  for (const auto& id : cur_cluster.members) {
    const ObjectInstance* inst = cur.find(id);
    if (inst == nullptr)
      throw Error(ErrorKind::validation, "match_instances: unknown cur member " + id);
    c.push_back(inst);
  }

  CostMatrix cost(r.size(), c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j)
      cost(i, j) = travel_distance(latest_position(*r[i]), c[j]->position,
                                   config.distance);

  InstanceMatch out;
  std::vector<char> ref_used(r.size(), 0), cur_used(c.size(), 0);
  for (const auto& [i, j] : solve_lsa(cost).pairs) {
    out.pairs.push_back({r[i]->instance_id, c[j]->instance_id, cost(i, j)});
    ref_used[i] = cur_used[j] = 1;
  }
  for (std::size_t i = 0; i < r.size(); ++i)
    if (!ref_used[i]) out.absent.push_back(r[i]->instance_id);
  for (std::size_t j = 0; j < c.size(); ++j)
    if (!cur_used[j]) out.added.push_back(c[j]->instance_id);
  return out;
}

namespace detail {

inline ChangeReport finish_report(std::vector<MatchedPair> matched,
                                  std::vector<std::string> absent,
                                  std::vector<std::string> added) {
  ChangeReport rep;
  std::sort(matched.begin(), matched.end(),
            [](const MatchedPair& a, const MatchedPair& b) { return a.ref_id < b.ref_id; });
  std::sort(absent.begin(), absent.end());
  std::sort(added.begin(), added.end());
  rep.matched = std::move(matched);
  rep.absent = std::move(absent);
  rep.added = std::move(added);
  for (const auto& m : rep.matched) rep.total_distance += m.travel_distance;
  return rep;
}

}  // namespace detail

inline ChangeReport detect_changes(const SceneSnapshot& ref, const SceneSnapshot& cur,
                                   const MatchConfig& config) {
  const auto cluster_pairs = match_clusters(ref, cur, config);
  std::map<std::string, const InstanceCluster*> ref_c, cur_c;
  for (const auto& c : ref.clusters) ref_c[c.cluster_id] = &c;
  for (const auto& c : cur.clusters) cur_c[c.cluster_id] = &c;

  std::vector<MatchedPair> matched;
  std::vector<std::string> absent, added;
  std::set<std::string> ref_done, cur_done;
  for (const auto& [rid, cid] : cluster_pairs) {
    InstanceMatch im = match_instances(*ref_c.at(rid), ref, *cur_c.at(cid), cur, config);
    matched.insert(matched.end(), im.pairs.begin(), im.pairs.end());
    absent.insert(absent.end(), im.absent.begin(), im.absent.end());
    added.insert(added.end(), im.added.begin(), im.added.end());
    ref_done.insert(rid);
    cur_done.insert(cid);
  }
  for (const auto& c : ref.clusters)
    if (!ref_done.count(c.cluster_id))
      absent.insert(absent.end(), c.members.begin(), c.members.end());
  for (const auto& c : cur.clusters)
    if (!cur_done.count(c.cluster_id))
      added.insert(added.end(), c.members.begin(), c.members.end());
  return detail::finish_report(std::move(matched), std::move(absent), std::move(added));
}

/// Node-level baseline: repeatedly accept the unmatched same-class pair with
/// the smallest visual difference while it is <= gamma. Ties break by
/// (ref_id, cur_id).
inline ChangeReport greedy_detect_changes(const SceneSnapshot& ref,
                                          const NodeEmbeddings& ref_emb,
                                          const SceneSnapshot& cur,
                                          const NodeEmbeddings& cur_emb,
                                          const MatchConfig& config) {
  config.validate();
  struct Candidate {
    double v;
    const ObjectInstance* r;
    const ObjectInstance* c;
  };
  std::vector<Candidate> cand;
  for (const auto& r : ref.instances)
    for (const auto& c : cur.instances) {
      if (r.semantic_class != c.semantic_class) continue;
      const double v = squared_distance(ref_emb.at(r.instance_id), cur_emb.at(c.instance_id));
      if (v <= config.gamma) cand.push_back({v, &r, &c});
    }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    return std::tie(a.v, a.r->instance_id, a.c->instance_id) <
           std::tie(b.v, b.r->instance_id, b.c->instance_id);
  });

  std::set<std::string> ref_used, cur_used;
  std::vector<MatchedPair> matched;
  for (const auto& k : cand) {
    if (ref_used.count(k.r->instance_id) || cur_used.count(k.c->instance_id)) continue;
    ref_used.insert(k.r->instance_id);
    cur_used.insert(k.c->instance_id);
    matched.push_back({k.r->instance_id, k.c->instance_id,
                       travel_distance(latest_position(*k.r), k.c->position, config.distance)});
  }
  std::vector<std::string> absent, added;
  for (const auto& r : ref.instances)
    if (!ref_used.count(r.instance_id)) absent.push_back(r.instance_id);
  for (const auto& c : cur.instances)
    if (!cur_used.count(c.instance_id)) added.push_back(c.instance_id);
  return detail::finish_report(std::move(matched), std::move(absent), std::move(added));
}

inline ChangeReport greedy_detect_changes(const SceneSnapshot& ref,
                                          const SceneSnapshot& cur,
                                          const EmbeddingModel& model,
                                          const MatchConfig& config) {
  return greedy_detect_changes(ref, node_embeddings(ref, model), cur,
                               node_embeddings(cur, model), config);
}

}  // namespace react
