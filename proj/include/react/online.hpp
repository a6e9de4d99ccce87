#pragma once

// Incremental matching while frames of the current session arrive.
//
// Every view is embedded once into an append-only library. Observations are
// associated to current instances (same class, within max_distance of the
// instance position, embedding within max_embedding_distance of the node
// embedding) or start a new instance; two instances whose running means
// come within the same gates are merged. After every frame that carries
// observations the whole current snapshot is re-clustered and matched
// against the reference, so the last report equals the offline result on
// the same aggregated input.

#include <cstddef>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "react/clustering.hpp"
#include "react/embedding.hpp"
#include "react/matching.hpp"
#include "react/scene_model.hpp"
#include "react/scenegen.hpp"

namespace react {

class EmbeddingLibrary {
 public:
  /// Embeds `view` and stores it. Throws on a repeated view id.
  const Vector& add(const ViewDescriptor& view, const EmbeddingModel& model) {
    if (entries_.count(view.view_id))
      throw Error(ErrorKind::validation, "embedding library: duplicate view_id " + view.view_id);
    Vector e = embed(model, view.data);
    ++embed_calls_;
    return entries_.emplace(view.view_id, std::move(e)).first->second;
  }

  const Vector& at(const std::string& view_id) const {
    auto it = entries_.find(view_id);
    if (it == entries_.end())
      throw Error(ErrorKind::validation, "embedding library: unknown view_id " + view_id);
    return it->second;
  }

  bool contains(const std::string& view_id) const { return entries_.count(view_id) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }
  std::size_t embed_calls() const noexcept { return embed_calls_; }

  bool operator==(const EmbeddingLibrary&) const = default;

 private:
  std::map<std::string, Vector> entries_;
  std::size_t embed_calls_ = 0;
};

struct AssociationConfig {
  double max_distance = 0.1;
  double max_embedding_distance = 2.0;
};

/// Builds the current-session snapshot from a stream of observations.
class SnapshotBuilder {
 public:
  SnapshotBuilder() = default;
  SnapshotBuilder(std::string session_id, std::int64_t time_index, AssociationConfig config)
      : config_(config) {
    snapshot_.session_id = std::move(session_id);
    snapshot_.time_index = time_index;
  }

  void add_frame(const Frame& frame, EmbeddingLibrary& library, const EmbeddingModel& model) {
    for (const auto& ob : frame.observations) add_observation(ob, library, model);
  }

  void add_observation(const Observation& ob, EmbeddingLibrary& library,
                       const EmbeddingModel& model) {
    const Vector& f = library.add(ob.view, model);
    std::size_t best = nearest(ob.semantic_class, ob.position, f, snapshot_.instances.size());

    if (best == snapshot_.instances.size()) {
      ObjectInstance inst;
      char buf[32];
      std::snprintf(buf, sizeof buf, "-o%04zu", next_id_++);
      inst.instance_id = snapshot_.session_id + buf;
      inst.semantic_class = ob.semantic_class;
      inst.position = ob.position;
      inst.position_history = {ob.position};
      inst.views.push_back(ob.view);
      position_sums_.push_back(ob.position);
      nodes_[inst.instance_id] = f;
      snapshot_.instances.push_back(std::move(inst));
    } else {
      snapshot_.instances[best].views.push_back(ob.view);
      Vec3& sum = position_sums_[best];
      for (int a = 0; a < 3; ++a) sum[a] += ob.position[a];
      refresh(best, library);
    }

    // Two instances whose running means meet the association gate are one
    // object seen under position noise: fold the later one into the earlier.
    for (;;) {
      const auto& inst = snapshot_.instances[best];
      const std::size_t other =
          nearest(inst.semantic_class, inst.position, nodes_.at(inst.instance_id), best);
      if (other == snapshot_.instances.size()) break;
      best = merge(std::min(best, other), std::max(best, other), library);
    }
  }

  const SceneSnapshot& snapshot() const noexcept { return snapshot_; }
  const NodeEmbeddings& node_embeddings() const noexcept { return nodes_; }

 private:
  // Index of the closest admissible instance other than `skip`, or
  // instances.size() when none passes the gates.
  std::size_t nearest(const std::string& cls, const Vec3& position, const Vector& f,
                      std::size_t skip) const {
    std::size_t best = snapshot_.instances.size();
    double best_d = 0.0;
    for (std::size_t i = 0; i < snapshot_.instances.size(); ++i) {
      if (i == skip) continue;
      const auto& inst = snapshot_.instances[i];
      if (inst.semantic_class != cls) continue;
      const double d = euclidean(inst.position, position);
      if (d > config_.max_distance) continue;
      if (squared_distance(f, nodes_.at(inst.instance_id)) > config_.max_embedding_distance)
        continue;
      if (best == snapshot_.instances.size() || d < best_d) {
        best = i;
        best_d = d;
      }
    }
    return best;
  }

  void refresh(std::size_t i, const EmbeddingLibrary& library) {
    auto& inst = snapshot_.instances[i];
    const Vec3& sum = position_sums_[i];
    const double n = static_cast<double>(inst.views.size());
    inst.position = {sum[0] / n, sum[1] / n, sum[2] / n};
    inst.position_history = {inst.position};
    std::vector<Vector> emb;
    emb.reserve(inst.views.size());
    for (const auto& v : inst.views) emb.push_back(library.at(v.view_id));
    nodes_[inst.instance_id] = component_median(emb);
  }

  std::size_t merge(std::size_t keep, std::size_t drop, const EmbeddingLibrary& library) {
    auto& k = snapshot_.instances[keep];
    auto& d = snapshot_.instances[drop];
    k.views.insert(k.views.end(), d.views.begin(), d.views.end());
    for (int a = 0; a < 3; ++a) position_sums_[keep][a] += position_sums_[drop][a];
    nodes_.erase(d.instance_id);
    snapshot_.instances.erase(snapshot_.instances.begin() + static_cast<std::ptrdiff_t>(drop));
    position_sums_.erase(position_sums_.begin() + static_cast<std::ptrdiff_t>(drop));
    refresh(keep, library);
    return keep;
  }

  AssociationConfig config_;
  std::size_t next_id_ = 0;
  SceneSnapshot snapshot_;
  std::vector<Vec3> position_sums_;
  NodeEmbeddings nodes_;
};

/// Offline counterpart of the online pipeline: associates every frame in
/// order and returns the resulting (unclustered) snapshot.
inline SceneSnapshot aggregate_frames(const std::vector<Frame>& frames,
                                      const EmbeddingModel& model,
                                      const std::string& session_id, std::int64_t time_index,
                                      const AssociationConfig& config = {}) {
  EmbeddingLibrary library;
  SnapshotBuilder builder(session_id, time_index, config);
  for (const auto& f : frames) builder.add_frame(f, library, model);
  return builder.snapshot();
}

struct OnlineConfig {
  double gamma = 0.0;
  AssociationConfig association;
  std::string session_id = "session1";
  std::int64_t time_index = 1;
};

class OnlineMatcher {
 public:
  OnlineMatcher(SceneSnapshot reference, EmbeddingModel model, OnlineConfig config)
      : reference_(std::move(reference)),
        model_(std::move(model)),
        config_(std::move(config)),
        builder_(config_.session_id, config_.time_index, config_.association) {
    if (!reference_.clustered())
      throw Error(ErrorKind::validation, "online: reference snapshot is not clustered");
    model_.validate();
  }

  void process_frame(const Frame& frame) {
    ++frames_processed_;
    if (frame.observations.empty()) return;
    builder_.add_frame(frame, library_, model_);
    last_report_ = current_report();
  }

  ChangeReport finalize() {
    if (!last_report_) last_report_ = current_report();
    return *last_report_;
  }

  /// Current snapshot clustered with the configured gamma.
  SceneSnapshot current() const {
    return cluster_with_embeddings(builder_.snapshot(), builder_.node_embeddings(),
                                   ClusterConfig{config_.gamma});
  }

  const SceneSnapshot& reference() const noexcept { return reference_; }
  const EmbeddingLibrary& library() const noexcept { return library_; }
  const std::optional<ChangeReport>& last_report() const noexcept { return last_report_; }
  std::size_t frames_processed() const noexcept { return frames_processed_; }

 private:
  ChangeReport current_report() const {
    return detect_changes(reference_, current(), MatchConfig{config_.gamma});
  }

  SceneSnapshot reference_;
  EmbeddingModel model_;
  OnlineConfig config_;
  SnapshotBuilder builder_;
  EmbeddingLibrary library_;
  std::optional<ChangeReport> last_report_;
  std::size_t frames_processed_ = 0;
};

}  // namespace react
