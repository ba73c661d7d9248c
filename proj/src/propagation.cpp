#include "smartquery/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace smartquery {

Matrix label_seed(const LabelState& state) {
  Matrix y(state.num_nodes(), static_cast<std::size_t>(state.num_classes()));
  for (NodeId v : state.labeled()) y(static_cast<std::size_t>(v), static_cast<std::size_t>(*state.label(v))) = 1.0;
  return y;
}

PropagationResult propagate(const NormalizedAdjacency& adj, const Matrix& seed, const PropagationOptions& opts) {
  if (seed.rows() != adj.values.rows) throw ShapeError("propagate: seed rows differ from node count");
  if (!(opts.alpha >= 0.0 && opts.alpha < 1.0)) throw std::invalid_argument("propagate: alpha must be in [0, 1)");
  const CsrMatrix& a = adj.values;
  const std::size_t w = seed.cols();
  const double alpha = opts.alpha;
  const double keep = 1.0 - alpha;

  PropagationResult res;
  res.f = seed;
  Matrix next(seed.rows(), w);
  for (int it = 0; it < opts.max_iterations; ++it) {
    double change = 0.0;
    for (std::size_t r = 0; r < a.rows; ++r) {
      auto dst = next.row(r);
      auto y = seed.row(r);
      for (std::size_t j = 0; j < w; ++j) dst[j] = 0.0;
      for (std::size_t e = a.row_ptr[r]; e < a.row_ptr[r + 1]; ++e) {
        const double v = a.values[e];
        auto src = res.f.row(static_cast<std::size_t>(a.col_idx[e]));
        for (std::size_t j = 0; j < w; ++j) dst[j] += v * src[j];
      }
      auto cur = res.f.row(r);
      for (std::size_t j = 0; j < w; ++j) {
        dst[j] = alpha * dst[j] + keep * y[j];
        change = std::max(change, std::abs(dst[j] - cur[j]));
      }
    }
    std::swap(res.f, next);
    res.iterations = it + 1;
    if (change < opts.tolerance) {
      res.converged = true;
      break;
    }
  }
  return res;
}

namespace {

void normalize_row(std::span<const double> in, std::span<double> out) {
  double s = 0.0;
  for (double v : in) s += std::abs(v);
  if (s < 1e-12) {
    const double uniform = 1.0 / static_cast<double>(in.size());
    for (double& v : out) v = uniform;
  } else {
    for (std::size_t j = 0; j < in.size(); ++j) out[j] = std::abs(in[j]) / s;
  }
}

}  // namespace

Matrix lp_posterior(const Matrix& f) {
  Matrix p(f.rows(), f.cols());
  for (std::size_t r = 0; r < p.rows(); ++r) normalize_row(f.row(r), p.row(r));
  return p;
}

double lp_row_entropy(std::span<const double> f_row) {
  constexpr std::size_t kStack = 64;
  double stack[kStack];
  std::vector<double> heap;
  std::span<double> buf;
  if (f_row.size() <= kStack) {
    buf = {stack, f_row.size()};
  } else {
    heap.resize(f_row.size());
    buf = heap;
  }
  normalize_row(f_row, buf);
  return row_entropy(buf);
}

double graph_uncertainty(const Matrix& probs) {
  double h = 0.0;
  for (std::size_t r = 0; r < probs.rows(); ++r) h += row_entropy(probs.row(r));
  return h;
}

}  // namespace smartquery
