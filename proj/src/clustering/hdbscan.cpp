#include "segad/clustering/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "segad/common/error.hpp"

namespace segad::clustering {

std::vector<double> core_distances(const Matrix& x, std::size_t k) {
  const std::size_t n = x.rows();
  std::vector<double> core(n, 0.0);
  if (n < 2 || k == 0) return core;
  k = std::min(k, n - 1);
  std::vector<double> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t m = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row[m++] = euclidean_distance(x.row(i), x.row(j));
    std::nth_element(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k - 1), row.end());
    core[i] = row[k - 1];
  }
  return core;
}

std::vector<MstEdge> mutual_reachability_mst(const Matrix& x, std::span<const double> core) {
  const std::size_t n = x.rows();
  std::vector<MstEdge> edges;
  if (n < 2) return edges;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<char> in_tree(n, 0);
  std::vector<double> best(n, inf);
  std::vector<std::size_t> from(n, 0);
  std::size_t cur = 0;
  in_tree[0] = 1;
  for (std::size_t step = 1; step < n; ++step) {
    for (std::size_t j = 0; j < n; ++j) {
      if (in_tree[j]) continue;
      const double w = std::max({core[cur], core[j], euclidean_distance(x.row(cur), x.row(j))});
      if (w < best[j]) {
        best[j] = w;
        from[j] = cur;
      }
    }
    std::size_t nxt = n;
    for (std::size_t j = 0; j < n; ++j)
      if (!in_tree[j] && (nxt == n || best[j] < best[nxt])) nxt = j;
    in_tree[nxt] = 1;
    edges.push_back({from[nxt], nxt, best[nxt]});
    cur = nxt;
  }
  return edges;
}

namespace {

struct Dendrogram {
  // Internal node i (0-based) has id n + i.
  std::vector<std::size_t> left, right, size;
  std::vector<double> dist;
};

Dendrogram single_linkage(std::size_t n, std::vector<MstEdge> mst) {
  std::stable_sort(mst.begin(), mst.end(),
                   [](const MstEdge& a, const MstEdge& b) { return a.weight < b.weight; });
  std::vector<std::size_t> parent(2 * n - 1);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t v) {
    while (parent[v] != v) {
      parent[v] = parent[parent[v]];
      v = parent[v];
    }
    return v;
  };
  Dendrogram d;
  auto node_size = [&](std::size_t v) { return v < n ? std::size_t{1} : d.size[v - n]; };
  for (std::size_t i = 0; i < mst.size(); ++i) {
    const std::size_t a = find(mst[i].a), b = find(mst[i].b);
    const std::size_t id = n + i;
    d.left.push_back(a);
    d.right.push_back(b);
    d.dist.push_back(mst[i].weight);
    d.size.push_back(node_size(a) + node_size(b));
    parent[a] = parent[b] = id;
  }
  return d;
}

double lambda_of(double dist) {
  return dist > 0.0 ? std::min(1.0 / dist, 1e300) : 1e300;
}

}  // namespace

HdbscanResult hdbscan(const Matrix& x, const HdbscanParams& params, Diagnostics* diag) {
  if (params.min_cluster_size < 2) throw RejectedInput("hdbscan: min_cluster_size must be >= 2");
  const std::size_t n = x.rows();
  const std::size_t mcs = params.min_cluster_size;
  const std::size_t ms = params.min_samples == 0 ? mcs : params.min_samples;

  HdbscanResult res;
  if (n < mcs) {
    warn(diag, "hdbscan: " + std::to_string(n) + " points is below min_cluster_size " +
                   std::to_string(mcs) + "; all points labeled noise");
    res.labeling = make_labeling(std::vector<int>(n, kNoise), "hdbscan");
    return res;
  }

  res.core_distance = core_distances(x, ms);
  res.mst = mutual_reachability_mst(x, res.core_distance);
  const bool degenerate = std::all_of(res.mst.begin(), res.mst.end(),
                                      [](const MstEdge& e) { return e.weight == 0.0; });
  if (n < 2 || degenerate) {
    // Every point coincides: there is no density structure to split.
    res.labeling = make_labeling(std::vector<int>(n, 0), "hdbscan");
    res.stability = {0.0};
    return res;
  }

  const Dendrogram dend = single_linkage(n, res.mst);
  const std::size_t root = 2 * n - 2;
  auto node_size = [&](std::size_t v) { return v < n ? std::size_t{1} : dend.size[v - n]; };
  auto points_under = [&](std::size_t v, auto&& emit) {
    std::vector<std::size_t> stack{v};
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      if (u < n) {
        emit(u);
      } else {
        stack.push_back(dend.right[u - n]);
        stack.push_back(dend.left[u - n]);
      }
    }
  };

  // Condensed tree. Cluster ids start at n (root) and increase on each split.
  std::vector<std::size_t> relabel(2 * n - 1, 0);
  std::size_t next_cluster = n;
  relabel[root] = next_cluster++;
  std::vector<std::size_t> queue{root};
  for (std::size_t qi = 0; qi < queue.size(); ++qi) {
    const std::size_t node = queue[qi];
    if (node < n) continue;
    const std::size_t l = dend.left[node - n], r = dend.right[node - n];
    const double lam = lambda_of(dend.dist[node - n]);
    const std::size_t ls = node_size(l), rs = node_size(r);
    const std::size_t parent = relabel[node];
    if (ls >= mcs && rs >= mcs) {
      for (std::size_t c : {l, r}) {
        relabel[c] = next_cluster++;
        res.condensed_tree.push_back({parent, relabel[c], lam, node_size(c)});
        queue.push_back(c);
      }
    } else {
      for (std::size_t c : {l, r}) {
        if (node_size(c) >= mcs) {
          relabel[c] = parent;
          queue.push_back(c);
        } else {
          points_under(c, [&](std::size_t p) { res.condensed_tree.push_back({parent, p, lam, 1}); });
        }
      }
    }
  }

  // Excess-of-mass stability.
  const std::size_t n_clusters = next_cluster - n;
  std::vector<double> birth(n_clusters, 0.0), stab(n_clusters, 0.0);
  std::vector<std::vector<std::size_t>> kids(n_clusters);
  std::vector<std::size_t> parent_of(n_clusters, 0);
  for (const auto& e : res.condensed_tree)
    if (e.child >= n) {
      birth[e.child - n] = e.lambda;
      kids[e.parent - n].push_back(e.child - n);
      parent_of[e.child - n] = e.parent - n;
    }
  for (const auto& e : res.condensed_tree)
    stab[e.parent - n] += (e.lambda - birth[e.parent - n]) * static_cast<double>(e.size);

  std::vector<char> selected(n_clusters, 0);
  std::vector<double> best = stab;
  // Children always carry larger ids than their parent.
  for (std::size_t c = n_clusters; c-- > 1;) {
    if (kids[c].empty()) {
      selected[c] = 1;
      continue;
    }
    double sub = 0.0;
    for (std::size_t k : kids[c]) sub += best[k];
    if (sub > stab[c]) {
      best[c] = sub;
    } else {
      selected[c] = 1;
      std::vector<std::size_t> stack(kids[c].begin(), kids[c].end());
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        selected[u] = 0;
        stack.insert(stack.end(), kids[u].begin(), kids[u].end());
      }
    }
  }

  // Each point belongs to the selected ancestor of the cluster it fell out of.
  std::vector<int> raw(n, kNoise);
  for (const auto& e : res.condensed_tree) {
    if (e.child >= n) continue;
    std::size_t c = e.parent - n;
    while (c != 0 && !selected[c]) c = parent_of[c];
    if (c != 0) raw[e.child] = static_cast<int>(c);
  }
  std::vector<int> order;  // selected cluster ids by first appearance
  std::vector<int> labels(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) {
    if (raw[i] == kNoise) continue;
    auto it = std::find(order.begin(), order.end(), raw[i]);
    if (it == order.end()) {
      order.push_back(raw[i]);
      it = order.end() - 1;
    }
    labels[i] = static_cast<int>(it - order.begin());
  }
  for (int c : order) res.stability.push_back(stab[static_cast<std::size_t>(c)]);
  res.labeling.labels = std::move(labels);
  res.labeling.k_effective = order.size();
  res.labeling.algorithm = "hdbscan";
  return res;
}

}  // namespace segad::clustering
