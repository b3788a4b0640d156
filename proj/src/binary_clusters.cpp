#include <algorithm>
#include <cmath>
#include <random>

#include "mcal/io.hpp"

namespace mcal {

// Twelve blobs on a rough 4 x 3 layout; horizontally and vertically adjacent blobs carry
// opposite labels. Sizes, spreads and spacing vary so some class boundaries are crowded
// and a few small blobs are easy to miss.
const std::vector<Blob>& binary_clusters_table() {
  static const std::vector<Blob> table = {
      {0.0, 0.0, 0.35, 0.35, 260, +1}, {1.6, 0.2, 0.30, 0.45, 180, -1},
      {3.4, 0.0, 0.50, 0.30, 240, +1}, {0.2, 1.8, 0.25, 0.25, 90, -1},
      {1.7, 1.7, 0.45, 0.45, 300, +1}, {3.3, 1.9, 0.30, 0.40, 150, -1},
      {0.0, 3.5, 0.55, 0.35, 220, +1}, {1.8, 3.3, 0.20, 0.30, 60, -1},
      {3.5, 3.5, 0.40, 0.40, 200, +1}, {5.2, 0.8, 0.35, 0.60, 160, -1},
      {5.0, 2.7, 0.25, 0.25, 80, +1},  {5.3, 4.3, 0.30, 0.30, 60, -1},
  };
  return table;
}

Dataset generate_binary_clusters(std::uint64_t seed, Index target_size) {
  const auto& table = binary_clusters_table();
  int reference = 0;
  for (const Blob& b : table) reference += b.count;
  const double scale = target_size > 0 ? static_cast<double>(target_size) / reference : 1.0;

  std::vector<int> counts;
  Index total = 0;
  for (const Blob& b : table) {
    counts.push_back(std::max(1, static_cast<int>(std::lround(b.count * scale))));
    total += counts.back();
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Dataset data;
  data.features.resize(total, 2);
  std::vector<Label> labels;
  labels.reserve(static_cast<std::size_t>(total));
  Index row = 0;
  for (std::size_t b = 0; b < table.size(); ++b) {
    const Blob& blob = table[b];
    for (int i = 0; i < counts[b]; ++i, ++row) {
      data.features(row, 0) = blob.cx + blob.sx * normal(rng);
      data.features(row, 1) = blob.cy + blob.sy * normal(rng);
      labels.push_back(blob.label);
    }
  }
  data.ground_truth = std::move(labels);
  data.n_classes = 2;
  data.binary = true;
  return data;
}

}  // namespace mcal
