#pragma once

// Rectangular linear sum assignment.
//
// solve_lsa is a shortest augmenting path solver in the Jonker-Volgenant
// family, started from zero dual potentials (no column reduction or
// auction initialization). Each row of the smaller side is inserted with one
// Dijkstra-like search over reduced costs. Forbidden pairs carry +inf and are
// never selected; if some row of the smaller side cannot be routed to a
// free column the problem is infeasible.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "react/common.hpp"

namespace react {

inline constexpr double kForbidden = std::numeric_limits<double>::infinity();

class CostMatrix {
 public:
  CostMatrix() = default;
  CostMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  CostMatrix(std::initializer_list<std::initializer_list<double>> init) {
    rows_ = init.size();
    cols_ = rows_ == 0 ? 0 : init.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& row : init) {
      if (row.size() != cols_)
        throw Error(ErrorKind::dimension, "CostMatrix: ragged initializer");
      data_.insert(data_.end(), row.begin(), row.end());
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  CostMatrix transposed() const {
    CostMatrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
      for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
  }

  /// Throws on NaN or -inf entries. +inf marks a forbidden pair.
  void validate() const {
    for (double x : data_) {
      if (std::isnan(x))
        throw Error(ErrorKind::validation, "CostMatrix: NaN entry");
      if (x == -std::numeric_limits<double>::infinity())
        throw Error(ErrorKind::validation, "CostMatrix: -inf entry");
    }
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

struct Assignment {
  /// (row, col) pairs sorted by row.
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  double total_cost = 0.0;
};

namespace detail {

inline double sum_in_row_order(
    const CostMatrix& cost,
    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  double s = 0.0;
  for (const auto& [r, c] : pairs) s += cost(r, c);
  return s;
}

// Requires cost.rows() <= cost.cols(). Returns col4row, or an empty vector
// when infeasible.
inline std::vector<std::ptrdiff_t> shortest_augmenting_path(
    const CostMatrix& cost) {
  const std::size_t nr = cost.rows();
  const std::size_t nc = cost.cols();
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<double> u(nr, 0.0), v(nc, 0.0), spc(nc);
  std::vector<std::ptrdiff_t> path(nc, -1), col4row(nr, -1), row4col(nc, -1);
  std::vector<char> visited_row(nr), visited_col(nc);

  for (std::size_t cur_row = 0; cur_row < nr; ++cur_row) {
    double min_val = 0.0;
    std::fill(visited_row.begin(), visited_row.end(), 0);
    std::fill(visited_col.begin(), visited_col.end(), 0);
    std::fill(spc.begin(), spc.end(), inf);

    std::ptrdiff_t sink = -1;
    std::size_t i = cur_row;
    while (sink == -1) {
      std::size_t best = nc;
      double lowest = inf;
      visited_row[i] = 1;
      // Ascending scan: ties resolve to the lowest column index, except that
      // a free column wins over an assigned one since it ends the search.
      for (std::size_t j = 0; j < nc; ++j) {
        if (visited_col[j]) continue;
        const double r = min_val + cost(i, j) - u[i] - v[j];
        if (r < spc[j]) {
          path[j] = static_cast<std::ptrdiff_t>(i);
          spc[j] = r;
        }
        if (spc[j] < lowest ||
            (spc[j] == lowest && best < nc && row4col[j] == -1 &&
             row4col[best] != -1)) {
          lowest = spc[j];
          best = j;
        }
      }
      min_val = lowest;
      if (best == nc || min_val == inf) return {};

      if (row4col[best] == -1)
        sink = static_cast<std::ptrdiff_t>(best);
      else
        i = static_cast<std::size_t>(row4col[best]);
      visited_col[best] = 1;
    }

    u[cur_row] += min_val;
    for (std::size_t r = 0; r < nr; ++r)
      if (visited_row[r] && r != cur_row)
        u[r] += min_val - spc[static_cast<std::size_t>(col4row[r])];
    for (std::size_t c = 0; c < nc; ++c)
      if (visited_col[c]) v[c] -= min_val - spc[c];

    std::size_t j = static_cast<std::size_t>(sink);
    while (true) {
      const std::ptrdiff_t r = path[j];
      row4col[j] = r;
      const std::ptrdiff_t prev = col4row[static_cast<std::size_t>(r)];
      col4row[static_cast<std::size_t>(r)] = static_cast<std::ptrdiff_t>(j);
      if (static_cast<std::size_t>(r) == cur_row) break;
      j = static_cast<std::size_t>(prev);
    }
  }
  return col4row;
}

}  // namespace detail

/// Minimum-cost assignment covering every element of the smaller side.
/// Throws ErrorKind::infeasible when forbidden entries block such an
/// assignment. An empty matrix yields an empty assignment.
inline Assignment solve_lsa(const CostMatrix& cost) {
  cost.validate();
  Assignment out;
  if (cost.rows() == 0 || cost.cols() == 0) return out;

  const bool transpose = cost.rows() > cost.cols();
  const CostMatrix work = transpose ? cost.transposed() : cost;
  const auto col4row = detail::shortest_augmenting_path(work);
  if (col4row.empty())
    throw Error(ErrorKind::infeasible,
                "solve_lsa: no complete assignment of the smaller side avoids "
                "forbidden entries");

  for (std::size_t r = 0; r < col4row.size(); ++r) {
    const auto c = static_cast<std::size_t>(col4row[r]);
    if (transpose)
      out.pairs.emplace_back(c, r);
    else
      out.pairs.emplace_back(r, c);
  }
  std::sort(out.pairs.begin(), out.pairs.end());
  out.total_cost = detail::sum_in_row_order(cost, out.pairs);
  return out;
}

/// Assignment that may leave elements of both sides unassigned: maximizes
/// the number of non-forbidden pairs first, then minimizes their total cost.
/// Solved as a square problem with one "unassigned" slot per row and column.
inline Assignment solve_lsa_partial(const CostMatrix& cost) {
  cost.validate();
  Assignment out;
  const std::size_t m = cost.rows();
  const std::size_t n = cost.cols();
  if (m == 0 || n == 0) return out;

  double bonus = 1.0;
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c)
      if (std::isfinite(cost(r, c))) bonus += 2.0 * std::abs(cost(r, c));

  CostMatrix big(m + n, n + m, kForbidden);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c)
      if (std::isfinite(cost(r, c))) big(r, c) = cost(r, c) - bonus;
    big(r, n + r) = 0.0;
  }
  for (std::size_t c = 0; c < n; ++c) {
    big(m + c, c) = 0.0;
    for (std::size_t r = 0; r < m; ++r) big(m + c, n + r) = 0.0;
  }

  const Assignment full = solve_lsa(big);
  for (const auto& [r, c] : full.pairs)
    if (r < m && c < n) out.pairs.emplace_back(r, c);
  out.total_cost = detail::sum_in_row_order(cost, out.pairs);
  return out;
}

inline constexpr std::size_t kBruteForceLimit = 8;

/// Exhaustive enumeration over injections of the smaller side into the
/// larger one. Reference oracle for solve_lsa; min(rows, cols) <= 8.
inline Assignment brute_force_lsa(const CostMatrix& cost) {
  cost.validate();
  Assignment best;
  if (cost.rows() == 0 || cost.cols() == 0) return best;
  const bool transpose = cost.rows() > cost.cols();
  const CostMatrix work = transpose ? cost.transposed() : cost;
  const std::size_t k = work.rows();
  const std::size_t n = work.cols();
  if (k > kBruteForceLimit)
    throw Error(ErrorKind::validation,
                "brute_force_lsa: smaller side " + std::to_string(k) +
                    " exceeds limit " + std::to_string(kBruteForceLimit));

  std::vector<std::size_t> choice(k);
  std::vector<char> used(n, 0);
  bool found = false;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::size_t, std::size_t>> scratch;

  auto recurse = [&](auto&& self, std::size_t row) -> void {
    if (row == k) {
      scratch.clear();
      for (std::size_t r = 0; r < k; ++r) {
        if (transpose)
          scratch.emplace_back(choice[r], r);
        else
          scratch.emplace_back(r, choice[r]);
      }
      std::sort(scratch.begin(), scratch.end());
      const double c = detail::sum_in_row_order(cost, scratch);
      if (!found || c < best_cost) {
        found = true;
        best_cost = c;
        best.pairs = scratch;
      }
      return;
    }
    for (std::size_t col = 0; col < n; ++col) {
      if (used[col] || !std::isfinite(work(row, col))) continue;
      used[col] = 1;
      choice[row] = col;
      self(self, row + 1);
      used[col] = 0;
    }
  };
  recurse(recurse, 0);

  if (!found)
    throw Error(ErrorKind::infeasible,
                "brute_force_lsa: every complete assignment uses a forbidden "
                "entry");
  best.total_cost = best_cost;
  return best;
}

}  // namespace react
