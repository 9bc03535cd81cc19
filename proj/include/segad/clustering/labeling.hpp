#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace segad::clustering {

inline constexpr int kNoise = -1;

struct ClusterLabeling {
  std::vector<int> labels;  // kNoise for noise
  std::size_t k_effective = 0;
  std::string algorithm;
};

// Number of distinct non-noise labels.
std::size_t count_clusters(std::span<const int> labels);

// Relabels clusters to 0..k-1 in order of first appearance; noise stays -1.
ClusterLabeling make_labeling(std::vector<int> labels, std::string algorithm);

}  // namespace segad::clustering
