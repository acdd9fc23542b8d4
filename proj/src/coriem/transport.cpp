#include "coriem/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coriem/error.hpp"

namespace coriem::ot {
namespace {

constexpr double kReducedCostTol = 1e-12;

struct Cell {
  int r;
  int c;
};

class Simplex {
 public:
  Simplex(std::span<const double> a, std::span<const double> b, std::span<const double> cost)
      : m_(static_cast<int>(a.size())),
        n_(static_cast<int>(b.size())),
        cost_(cost),
        flow_(a.size() * b.size(), 0.0),
        basic_(a.size() * b.size(), 0) {
    northwest(a, b);
  }

  TransportResult run() {
    TransportResult res;
    // Each pivot strictly improves or is degenerate; Bland's rule bounds the
    // count, the cap only guards against a logic error.
    const int cap = 50 * (m_ + n_) * (m_ + n_) + 1000;
    while (res.pivots < cap) {
      potentials();
      int enter = -1;
      for (int idx = 0; idx < m_ * n_; ++idx) {
        if (basic_[idx]) continue;
        const int r = idx / n_;
        const int c = idx % n_;
        if (cost_[idx] - u_[r] - v_[c] < -kReducedCostTol) {
          enter = idx;
          break;
        }
      }
      if (enter < 0) break;
      pivot(enter);
      ++res.pivots;
    }
    if (res.pivots >= cap) throw RuntimeError("transport: simplex failed to converge");
    res.plan = flow_;
    for (int idx = 0; idx < m_ * n_; ++idx) res.cost += flow_[idx] * cost_[idx];
    return res;
  }

 private:
  int at(int r, int c) const { return r * n_ + c; }

  void northwest(std::span<const double> a_in, std::span<const double> b_in) {
    std::vector<double> a(a_in.begin(), a_in.end());
    std::vector<double> b(b_in.begin(), b_in.end());
    int r = 0;
    int c = 0;
    while (r < m_ && c < n_) {
      const double x = std::min(a[r], b[c]);
      flow_[at(r, c)] = x;
      basic_[at(r, c)] = 1;
      a[r] -= x;
      b[c] -= x;
      // Move down on a tie unless on the last row, so exactly m + n - 1 cells
      // become basic.
      if ((a[r] <= b[c] && r < m_ - 1) || c == n_ - 1) {
        ++r;
      } else {
        ++c;
      }
    }
  }

  // Solves u_r + v_c = cost on basic cells by walking the spanning tree.
  void potentials() {
    u_.assign(m_, 0.0);
    v_.assign(n_, 0.0);
    std::vector<char> seen_r(m_, 0);
    std::vector<char> seen_c(n_, 0);
    std::vector<int> stack = {0};  // rows as r, columns as m + c
    seen_r[0] = 1;
    while (!stack.empty()) {
      const int node = stack.back();
      stack.pop_back();
      if (node < m_) {
        for (int c = 0; c < n_; ++c) {
          if (basic_[at(node, c)] && !seen_c[c]) {
            v_[c] = cost_[at(node, c)] - u_[node];
            seen_c[c] = 1;
            stack.push_back(m_ + c);
          }
        }
      } else {
        const int c = node - m_;
        for (int r = 0; r < m_; ++r) {
          if (basic_[at(r, c)] && !seen_r[r]) {
            u_[r] = cost_[at(r, c)] - v_[c];
            seen_r[r] = 1;
            stack.push_back(r);
          }
        }
      }
    }
  }

  // Path from row `r0` to column `c1` through basic cells, as alternating
  // cells starting at row r0.
  std::vector<Cell> tree_path(int r0, int c1) const {
    const int total = m_ + n_;
    std::vector<int> parent(total, -2);
    std::vector<int> queue = {r0};
    parent[r0] = -1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int node = queue[q];
      if (node == m_ + c1) break;
      if (node < m_) {
        for (int c = 0; c < n_; ++c) {
          if (basic_[at(node, c)] && parent[m_ + c] == -2) {
            parent[m_ + c] = node;
            queue.push_back(m_ + c);
          }
        }
      } else {
        const int c = node - m_;
        for (int r = 0; r < m_; ++r) {
          if (basic_[at(r, c)] && parent[r] == -2) {
            parent[r] = node;
            queue.push_back(r);
          }
        }
      }
    }
    if (parent[m_ + c1] == -2) throw RuntimeError("transport: basis is not a spanning tree");
    std::vector<Cell> cells;
    for (int node = m_ + c1; parent[node] != -1; node = parent[node]) {
      const int prev = parent[node];
      cells.push_back(node < m_ ? Cell{node, prev - m_} : Cell{prev, node - m_});
    }
    std::reverse(cells.begin(), cells.end());
    return cells;
  }

  void pivot(int enter) {
    const int r = enter / n_;
    const int c = enter % n_;
    // Cycle: entering cell (+), then the tree path from column c back to
    // row r with alternating signs. The path from r to c starts at row r, so
    // reversed it starts at column c.
    std::vector<Cell> path = tree_path(r, c);
    std::reverse(path.begin(), path.end());
    int leave = -1;
    double theta = INFINITY;
    for (std::size_t k = 0; k < path.size(); k += 2) {
      const int idx = at(path[k].r, path[k].c);
      if (flow_[idx] < theta || (flow_[idx] == theta && idx < leave)) {
        theta = flow_[idx];
        leave = idx;
      }
    }
    flow_[enter] += theta;
    for (std::size_t k = 0; k < path.size(); ++k) {
      const int idx = at(path[k].r, path[k].c);
      flow_[idx] += (k % 2 == 0) ? -theta : theta;
    }
    basic_[enter] = 1;
    basic_[leave] = 0;
    flow_[leave] = 0.0;
  }

  int m_;
  int n_;
  std::span<const double> cost_;
  std::vector<double> flow_;
  std::vector<char> basic_;
  std::vector<double> u_;
  std::vector<double> v_;
};

}  // namespace

TransportResult solve(std::span<const double> supply, std::span<const double> demand,
                      std::span<const double> cost) {
  if (supply.empty() || demand.empty()) throw UsageError("transport: empty distribution");
  if (cost.size() != supply.size() * demand.size()) {
    throw DimensionMismatch("transport: cost matrix shape does not match the distributions");
  }
  for (double x : supply) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw UsageError("transport: negative or non-finite mass");
  }
  for (double x : demand) {
    if (!(x >= 0.0) || !std::isfinite(x)) throw UsageError("transport: negative or non-finite mass");
  }
  const double sa = std::accumulate(supply.begin(), supply.end(), 0.0);
  const double sb = std::accumulate(demand.begin(), demand.end(), 0.0);
  if (std::abs(sa - sb) > 1e-9 * std::max({1.0, sa, sb})) {
    throw UsageError("transport: supply and demand totals differ");
  }
  // Absorb rounding residue into the last demand entry so northwest corner
  // terminates with a consistent basis.
  std::vector<double> b(demand.begin(), demand.end());
  b.back() = std::max(0.0, b.back() + (sa - sb));
  return Simplex(supply, b, cost).run();
}

}  // namespace coriem::ot
