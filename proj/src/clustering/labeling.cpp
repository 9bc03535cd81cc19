#include "segad/clustering/labeling.hpp"

#include <algorithm>
#include <map>

namespace segad::clustering {

std::size_t count_clusters(std::span<const int> labels) {
  std::vector<int> ids;
  for (int l : labels)
    if (l >= 0) ids.push_back(l);
  std::sort(ids.begin(), ids.end());
  return static_cast<std::size_t>(std::unique(ids.begin(), ids.end()) - ids.begin());
}

ClusterLabeling make_labeling(std::vector<int> labels, std::string algorithm) {
  std::map<int, int> remap;
  for (int& l : labels) {
    if (l < 0) {
      l = kNoise;
      continue;
    }
    auto [it, inserted] = remap.emplace(l, static_cast<int>(remap.size()));
    l = it->second;
  }
  ClusterLabeling out;
  out.k_effective = remap.size();
  out.labels = std::move(labels);
  out.algorithm = std::move(algorithm);
  return out;
}

}  // namespace segad::clustering
