#include "smartquery/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace smartquery {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, std::size_t k, Rng& rng, int max_iterations) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  if (n == 0 || k == 0) throw std::invalid_argument("kmeans: need points and k > 0");
  k = std::min(k, n);

  KMeansResult res;
  res.centroids = Matrix(k, dim);
  // k-means++ seeding
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(uniform_index(rng, n));
  std::copy_n(points.row(first).begin(), dim, res.centroids.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      best[i] = std::min(best[i], sq_dist(points.row(i), res.centroids.row(c - 1)));
      total += best[i];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      double target = uniform01(rng) * total;
      for (pick = 0; pick + 1 < n; ++pick) {
        target -= best[pick];
        if (target < 0.0) break;
      }
    } else {
      pick = static_cast<std::size_t>(uniform_index(rng, n));
    }
    std::copy_n(points.row(pick).begin(), dim, res.centroids.row(c).begin());
  }

  res.assign.assign(n, 0);
  res.distance.assign(n, 0.0);
  std::vector<std::size_t> count(k);
  for (int it = 0; it < max_iterations; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t arg = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = sq_dist(points.row(i), res.centroids.row(c));
        if (d < bd) {
          bd = d;
          arg = c;
        }
      }
      if (arg != res.assign[i]) changed = true;
      res.assign[i] = arg;
      res.distance[i] = bd;
    }
    res.iterations = it + 1;
    if (!changed) break;

    Matrix sums(k, dim);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto dst = sums.row(res.assign[i]);
      auto src = points.row(i);
      for (std::size_t j = 0; j < dim; ++j) dst[j] += src[j];
      ++count[res.assign[i]];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (count[c] == 0) {
        // Degenerate cluster: move it to the worst-served point.
        const auto far = static_cast<std::size_t>(std::max_element(res.distance.begin(), res.distance.end()) -
                                                  res.distance.begin());
        std::copy_n(points.row(far).begin(), dim, res.centroids.row(c).begin());
        res.distance[far] = 0.0;
        continue;
      }
      auto dst = res.centroids.row(c);
      auto src = sums.row(c);
      for (std::size_t j = 0; j < dim; ++j) dst[j] = src[j] / static_cast<double>(count[c]);
    }
  }
  // Distances against the final centroids.
  for (std::size_t i = 0; i < n; ++i) {
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(points.row(i), res.centroids.row(c));
      if (d < bd) {
        bd = d;
        res.assign[i] = c;
      }
    }
    res.distance[i] = std::sqrt(bd);
  }
  return res;
}

}  // namespace smartquery
