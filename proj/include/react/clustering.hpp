#pragma once

// Node embeddings (component-wise median over an instance's view
// embeddings) and single-link threshold clustering of same-class nodes.

#include <algorithm>
#include <cstddef>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "react/common.hpp"
#include "react/embedding.hpp"
#include "react/scene_model.hpp"

namespace react {

struct ClusterConfig {
  /// Squared-distance threshold on node embeddings.
  double gamma = 0.0;

  void validate() const {
    if (!(gamma >= 0.0))
      throw Error(ErrorKind::validation, "ClusterConfig: gamma must be >= 0");
  }
};

/// Component-wise median; for an even count the mean of the two central
/// values.
inline Vector component_median(const std::vector<Vector>& vectors) {
  if (vectors.empty())
    throw Error(ErrorKind::validation, "component_median: no vectors");
  const std::size_t e = vectors.front().size();
  Vector out(e);
  std::vector<double> column(vectors.size());
  for (std::size_t k = 0; k < e; ++k) {
    for (std::size_t i = 0; i < vectors.size(); ++i) {
      if (vectors[i].size() != e)
        throw Error(ErrorKind::dimension, "component_median: length mismatch");
      column[i] = vectors[i][k];
    }
    const std::size_t n = column.size();
    const std::size_t mid = n / 2;
    std::nth_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(mid),
                     column.end());
    const double upper = column[mid];
    if (n % 2 == 1) {
      out[k] = upper;
    } else {
      const double lower =
          *std::max_element(column.begin(), column.begin() + static_cast<std::ptrdiff_t>(mid));
      out[k] = 0.5 * (lower + upper);
    }
  }
  return out;
}

inline Vector node_embedding(const ObjectInstance& instance,
                             const EmbeddingModel& model) {
  if (instance.views.empty())
    throw Error(ErrorKind::validation,
                "node_embedding: instance " + instance.instance_id +
                    " has no views");
  std::vector<Vector> emb;
  emb.reserve(instance.views.size());
  for (const auto& v : instance.views) emb.push_back(embed(model, v.data));
  return component_median(emb);
}

using NodeEmbeddings = std::map<std::string, Vector>;

inline NodeEmbeddings node_embeddings(const SceneSnapshot& snapshot,
                                      const EmbeddingModel& model) {
  NodeEmbeddings out;
  for (const auto& inst : snapshot.instances)
    out[inst.instance_id] = node_embedding(inst, model);
  return out;
}

/// Squared Euclidean distance between cluster embeddings.
inline double visual_difference(const InstanceCluster& a, const InstanceCluster& b) {
  return squared_distance(a.embedding, b.embedding);
}

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    // Smaller index becomes the root so roots are order-independent.
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Clusters `snapshot` from precomputed node embeddings. Within each
/// semantic class, nodes i and j are linked iff ||f_i - f_j||^2 <= gamma;
/// clusters are the connected components. Cluster ids are regenerated from
/// the partition and the member ids only.
inline SceneSnapshot cluster_with_embeddings(const SceneSnapshot& snapshot,
                                             const NodeEmbeddings& embeddings,
                                             const ClusterConfig& config) {
  config.validate();
  SceneSnapshot out = snapshot;
  out.clusters.clear();

  std::vector<const ObjectInstance*> nodes;
  for (const auto& inst : snapshot.instances) nodes.push_back(&inst);
  std::sort(nodes.begin(), nodes.end(), [](auto* a, auto* b) {
    return a->instance_id < b->instance_id;
  });
  std::vector<const Vector*> f;
  for (auto* n : nodes) {
    auto it = embeddings.find(n->instance_id);
    if (it == embeddings.end())
      throw Error(ErrorKind::validation,
                  "cluster: missing node embedding for " + n->instance_id);
    f.push_back(&it->second);
  }

  detail::UnionFind uf(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i)
    for (std::size_t j = i + 1; j < nodes.size(); ++j)
      if (nodes[i]->semantic_class == nodes[j]->semantic_class &&
          squared_distance(*f[i], *f[j]) <= config.gamma)
        uf.unite(i, j);

  // Components keyed by their root, which is the smallest member index;
  // std::map iteration therefore orders clusters by first member id.
  std::map<std::size_t, std::vector<std::size_t>> components;
  for (std::size_t i = 0; i < nodes.size(); ++i) components[uf.find(i)].push_back(i);

  std::size_t k = 0;
  for (const auto& [root, idx] : components) {
    InstanceCluster c;
    char buf[32];
    std::snprintf(buf, sizeof buf, "c%03zu", k++);
    c.cluster_id = snapshot.session_id + ":" + buf;
    c.semantic_class = nodes[root]->semantic_class;
    c.embedding.assign(f[root]->size(), 0.0);
    for (std::size_t i : idx) {
      c.members.push_back(nodes[i]->instance_id);
      for (std::size_t d = 0; d < c.embedding.size(); ++d) c.embedding[d] += (*f[i])[d];
      for (const auto& v : nodes[i]->views) c.view_library.push_back(v.view_id);
    }
    for (double& x : c.embedding) x /= static_cast<double>(idx.size());
    out.clusters.push_back(std::move(c));
  }
  return out;
}

inline SceneSnapshot cluster_snapshot(const SceneSnapshot& snapshot,
                                      const EmbeddingModel& model,
                                      const ClusterConfig& config) {
  return cluster_with_embeddings(snapshot, node_embeddings(snapshot, model), config);
}

}  // namespace react
