#pragma once

#include <vector>

#include "smartquery/dense.hpp"
#include "smartquery/random.hpp"

namespace smartquery {

struct KMeansResult {
  Matrix centroids;                 // k x dim
  std::vector<std::size_t> assign;  // per point
  std::vector<double> distance;     // Euclidean distance to assigned centroid
  int iterations{0};
};

// Lloyd's algorithm with k-means++ seeding. A cluster that empties is
// re-seeded at the point farthest from its current centroid.
KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, int max_iterations = 100);

}  // namespace smartquery
