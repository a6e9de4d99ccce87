#pragma once

// Change-detection scoring, threshold sweeps and the embedding latency
// benchmark.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "react/clustering.hpp"
#include "react/embedding.hpp"
#include "react/matching.hpp"
#include "react/scenegen.hpp"

namespace react {

enum class Method { react, greedy };

inline const char* to_string(Method m) { return m == Method::react ? "react" : "greedy"; }

inline Method parse_method(const std::string& s) {
  if (s == "react") return Method::react;
  if (s == "greedy") return Method::greedy;
  throw Error(ErrorKind::usage, "unknown method '" + s + "' (react|greedy)");
}

struct EvalResult {
  Method method = Method::react;
  double gamma = 0.0;
  double f1_matched = 0.0;
  double f1_new = 0.0;
  double f1_absent = 0.0;
  double sum_distance = 0.0;

  double aggregated() const { return f1_matched + f1_new + f1_absent; }
  bool operator==(const EvalResult&) const = default;
};

/// F1 from counts. Both sets empty scores 1; exactly one empty scores 0.
inline double f1_score(std::size_t true_positive, std::size_t predicted, std::size_t actual) {
  if (predicted == 0 && actual == 0) return 1.0;
  if (predicted == 0 || actual == 0 || true_positive == 0) return 0.0;
  const double p = static_cast<double>(true_positive) / static_cast<double>(predicted);
  const double r = static_cast<double>(true_positive) / static_cast<double>(actual);
  return 2.0 * p * r / (p + r);
}

/// Scores `report` against the first transition of `truth`.
///
/// A matched pair counts as correct when both instances share a visual
/// category; true positives per category are capped at the number of
/// ground-truth pairs of that category. New and absent are scored by
/// instance-id set membership.
inline EvalResult score(const ChangeReport& report, const GroundTruth& truth) {
  if (truth.sessions.size() < 2)
    throw Error(ErrorKind::validation, "score: ground truth needs two sessions");
  const auto& ref = truth.sessions[0].instances;
  const auto& cur = truth.sessions[1].instances;
  auto label = [](const std::map<std::string, InstanceTruth>& m, const std::string& id) {
    auto it = m.find(id);
    if (it == m.end())
      throw Error(ErrorKind::validation, "score: session mismatch, unknown instance " + id);
    return it->second.label;
  };

  std::map<int, std::size_t> gt_pairs, correct;
  for (const auto& p : truth.matched) ++gt_pairs[label(ref, p.ref_id)];
  for (const auto& m : report.matched) {
    const int a = label(ref, m.ref_id);
    if (a == label(cur, m.cur_id)) ++correct[a];
  }
  std::size_t tp_m = 0;
  for (const auto& [c, n] : correct) tp_m += std::min(n, gt_pairs[c]);

  auto set_tp = [](const std::vector<std::string>& pred, const std::vector<std::string>& gt) {
    const std::set<std::string> g(gt.begin(), gt.end());
    std::size_t tp = 0;
    for (const auto& id : pred) tp += g.count(id);
    return tp;
  };
  for (const auto& id : report.absent) label(ref, id);
  for (const auto& id : report.added) label(cur, id);

  EvalResult r;
  r.f1_matched = f1_score(tp_m, report.matched.size(), truth.matched.size());
  r.f1_new = f1_score(set_tp(report.added, truth.added), report.added.size(), truth.added.size());
  r.f1_absent =
      f1_score(set_tp(report.absent, truth.absent), report.absent.size(), truth.absent.size());
  r.sum_distance = report.total_distance;
  return r;
}

/// Ground truth re-expressed for a current snapshot assembled from frames.
/// Each built instance takes the identity owning most of its views (ties to
/// the lexicographically smaller owner); when several built instances claim
/// one physical object, the smallest id is the match and the rest are new.
inline GroundTruth relabel_truth(const GroundTruth& truth, const SceneSnapshot& built) {
  GroundTruth out;
  out.label_names = truth.label_names;
  out.sessions.push_back(truth.sessions.at(0));
  const SessionTruth& gen = truth.sessions.at(1);
  SessionTruth st;
  st.session_id = built.session_id;

  std::map<std::string, std::string> physical_to_ref;
  for (const auto& [id, t] : truth.sessions[0].instances) physical_to_ref[t.physical_id] = id;
  std::set<std::string> cur_physical_in_gt;
  for (const auto& m : truth.matched)
    cur_physical_in_gt.insert(gen.instances.at(m.cur_id).physical_id);

  std::vector<const ObjectInstance*> inst;
  for (const auto& i : built.instances) inst.push_back(&i);
  std::sort(inst.begin(), inst.end(),
            [](auto* a, auto* b) { return a->instance_id < b->instance_id; });
  std::set<std::string> claimed;
  for (const auto* i : inst) {
    std::map<std::string, int> votes;
    for (const auto& v : i->views) ++votes[gen.view_owner.at(v.view_id)];
    std::string owner;
    int best = -1;
    for (const auto& [o, n] : votes)
      if (n > best) {
        best = n;
        owner = o;
      }
    InstanceTruth t = gen.instances.at(owner);
    st.instances[i->instance_id] = t;
    for (const auto& v : i->views) st.view_owner[v.view_id] = i->instance_id;
    const bool first = claimed.insert(t.physical_id).second;
    if (first && cur_physical_in_gt.count(t.physical_id)) {
      const std::string& ref_id = physical_to_ref.at(t.physical_id);
      double disp = 0.0;
      for (const auto& m : truth.matched)
        if (m.ref_id == ref_id) disp = m.displacement;
      out.matched.push_back({ref_id, i->instance_id, disp});
    } else {
      out.added.push_back(i->instance_id);
    }
  }
  std::set<std::string> matched_ref;
  for (const auto& m : out.matched) matched_ref.insert(m.ref_id);
  for (const auto& [id, t] : truth.sessions[0].instances)
    if (!matched_ref.count(id)) out.absent.push_back(id);
  out.sessions.push_back(std::move(st));
  std::sort(out.matched.begin(), out.matched.end(),
            [](const auto& a, const auto& b) { return a.ref_id < b.ref_id; });
  std::sort(out.added.begin(), out.added.end());
  return out;
}

inline std::vector<double> default_gamma_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 25; ++i) g.push_back(static_cast<double>(i) / 5.0);
  return g;
}

/// Runs one method at one threshold on unclustered snapshots with
/// precomputed node embeddings.
inline ChangeReport run_method(Method method, const SceneSnapshot& ref,
                               const NodeEmbeddings& ref_emb, const SceneSnapshot& cur,
                               const NodeEmbeddings& cur_emb, double gamma) {
  if (method == Method::greedy)
    return greedy_detect_changes(ref, ref_emb, cur, cur_emb, MatchConfig{gamma});
  const ClusterConfig cc{gamma};
  return detect_changes(cluster_with_embeddings(ref, ref_emb, cc),
                        cluster_with_embeddings(cur, cur_emb, cc), MatchConfig{gamma});
}

struct SweepSummary {
  Method method = Method::react;
  EvalResult best;
  /// Grid points whose aggregated F1 is within 1% of the best.
  std::size_t plateau_width = 0;
};

struct SweepResult {
  /// Ordered by (method as given, gamma as given).
  std::vector<EvalResult> rows;
  std::vector<SweepSummary> summaries;
};

inline SweepResult sweep(const SceneSnapshot& ref, const SceneSnapshot& cur,
                         const GroundTruth& truth, const EmbeddingModel& model,
                         const std::vector<Method>& methods,
                         const std::vector<double>& gamma_grid = default_gamma_grid()) {
  const NodeEmbeddings ref_emb = node_embeddings(ref, model);
  const NodeEmbeddings cur_emb = node_embeddings(cur, model);
  SweepResult out;
  for (Method m : methods) {
    SweepSummary s;
    s.method = m;
    double best = -1.0;
    std::vector<EvalResult> rows;
    for (double g : gamma_grid) {
      EvalResult r = score(run_method(m, ref, ref_emb, cur, cur_emb, g), truth);
      r.method = m;
      r.gamma = g;
      if (r.aggregated() > best) {
        best = r.aggregated();
        s.best = r;
      }
      rows.push_back(r);
    }
    for (const auto& r : rows)
      if (r.aggregated() >= best - 0.01 * best) ++s.plateau_width;
    out.rows.insert(out.rows.end(), rows.begin(), rows.end());
    out.summaries.push_back(s);
  }
  return out;
}

inline std::string sweep_csv(const SweepResult& s) {
  std::string out = "method,gamma,f1_m,f1_n,f1_a,sum_distance\n";
  char buf[256];
  for (const auto& r : s.rows) {
    std::snprintf(buf, sizeof buf, "%s,%.1f,%.17g,%.17g,%.17g,%.17g\n", to_string(r.method),
                  r.gamma, r.f1_matched, r.f1_new, r.f1_absent, r.sum_distance);
    out += buf;
  }
  return out;
}

inline nlohmann::json eval_to_json(const EvalResult& r) {
  return {{"method", to_string(r.method)}, {"gamma", r.gamma},
          {"f1_m", r.f1_matched},          {"f1_n", r.f1_new},
          {"f1_a", r.f1_absent},           {"aggregated_f1", r.aggregated()},
          {"sum_distance", r.sum_distance}};
}

inline nlohmann::json sweep_summary_json(const SweepResult& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& m : s.summaries) {
    nlohmann::json j = eval_to_json(m.best);
    j["plateau_width"] = m.plateau_width;
    rows.push_back(j);
  }
  return {{"optimal", rows}};
}

// Benchmark -----------------------------------------------------------------

struct BenchRow {
  std::size_t masks = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
};

/// Wall-clock latency of embedding one frame with `masks` instance views,
/// measured `repeats` times per mask count (median and nearest-rank p95).
inline std::vector<BenchRow> bench_embedding(const EmbeddingModel& model,
                                             const std::vector<std::size_t>& mask_counts,
                                             int repeats = 101, std::uint64_t seed = 0) {
  if (repeats < 30) throw Error(ErrorKind::validation, "bench_embedding: repeats must be >= 30");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01(0.0, 1.0);
  std::vector<BenchRow> out;
  volatile double sink = 0.0;
  for (std::size_t masks : mask_counts) {
    std::vector<Vector> frame(masks, Vector(model.input_dim()));
    for (auto& v : frame)
      for (auto& x : v) x = n01(rng);
    for (int w = 0; w < 5; ++w)
      for (const auto& v : frame) sink = sink + embed(model, v)[0];
    std::vector<double> ms;
    for (int r = 0; r < repeats; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      for (const auto& v : frame) sink = sink + embed(model, v)[0];
      const auto t1 = std::chrono::steady_clock::now();
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    std::sort(ms.begin(), ms.end());
    BenchRow row;
    row.masks = masks;
    const std::size_t n = ms.size();
    row.median_ms = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
    row.p95_ms = ms[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n))) - 1];
    out.push_back(row);
  }
  return out;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "masks,median_ms,p95_ms\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f\n", r.masks, r.median_ms, r.p95_ms);
    out += buf;
  }
  return out;
}

}  // namespace react
