#pragma once

// Test-only reference computations. Everything here works on dense Eigen
// matrices and shares no code path with the library beyond the input types.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "smartquery/dense.hpp"
#include "smartquery/graph.hpp"
#include "smartquery/random.hpp"

namespace oracle {

using smartquery::Matrix;
using smartquery::NodeId;
using smartquery::Rng;
using smartquery::SparseGraph;

inline Eigen::MatrixXd to_eigen(const Matrix& m) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out(static_cast<int>(r), static_cast<int>(c)) = m(r, c);
  }
  return out;
}

inline Matrix from_eigen(const Eigen::MatrixXd& m) {
  Matrix out(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (int r = 0; r < m.rows(); ++r) {
    for (int c = 0; c < m.cols(); ++c) out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = m(r, c);
  }
  return out;
}

// Erdos-Renyi graph; optionally forces the last node to be isolated.
inline SparseGraph random_graph(std::size_t n, double p, Rng& rng, bool isolated = false) {
  std::vector<std::pair<NodeId, NodeId>> e;
  const std::size_t limit = isolated ? n - 1 : n;
  for (std::size_t i = 0; i < limit; ++i) {
    for (std::size_t j = i + 1; j < limit; ++j) {
      if (smartquery::uniform01(rng) < p) e.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
    }
  }
  return SparseGraph::from_edges(n, e);
}

inline Matrix random_matrix(std::size_t r, std::size_t c, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (double& v : m.data()) v = smartquery::uniform(rng, lo, hi);
  return m;
}

inline Eigen::MatrixXd dense_adjacency(const SparseGraph& g) {
  const auto n = static_cast<int>(g.num_nodes());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (auto [u, v] : g.edge_list()) {
    a(u, v) = 1.0;
    a(v, u) = 1.0;
  }
  return a;
}

// D^-1/2 M D^-1/2 with zero rows/cols for zero degrees.
inline Eigen::MatrixXd sym_normalize(const Eigen::MatrixXd& m) {
  Eigen::VectorXd d = m.rowwise().sum();
  Eigen::VectorXd s(d.size());
  for (int i = 0; i < d.size(); ++i) s(i) = d(i) > 0 ? 1.0 / std::sqrt(d(i)) : 0.0;
  return s.asDiagonal() * m * s.asDiagonal();
}

// Closed-form label spreading fixed point (1 - a)(I - a S)^-1 Y.
inline Eigen::MatrixXd lp_closed_form(const Eigen::MatrixXd& s, const Eigen::MatrixXd& y, double alpha) {
  const Eigen::MatrixXd sys = Eigen::MatrixXd::Identity(s.rows(), s.cols()) - alpha * s;
  return (1.0 - alpha) * sys.partialPivLu().solve(y);
}

// Row-normalize F (uniform for all-zero rows) and sum entropies.
inline double lp_uncertainty(const Eigen::MatrixXd& f) {
  double h = 0.0;
  for (int r = 0; r < f.rows(); ++r) {
    const double s = f.row(r).cwiseAbs().sum();
    for (int c = 0; c < f.cols(); ++c) {
      const double p = s < 1e-12 ? 1.0 / static_cast<double>(f.cols()) : std::abs(f(r, c)) / s;
      if (p > 0) h -= p * std::log(p);
    }
  }
  return h;
}

// Dense PageRank power iteration with uniform dangling redistribution.
inline Eigen::VectorXd pagerank(const Eigen::MatrixXd& a, double beta, double tol = 1e-14, int iters = 100000) {
  const int n = static_cast<int>(a.rows());
  Eigen::MatrixXd m(n, n);
  for (int j = 0; j < n; ++j) {
    const double d = a.col(j).sum();
    if (d > 0) {
      m.col(j) = a.col(j) / d;
    } else {
      m.col(j).setConstant(1.0 / n);
    }
  }
  Eigen::MatrixXd google = beta * m + Eigen::MatrixXd::Constant(n, n, (1.0 - beta) / n);
  Eigen::VectorXd pr = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int it = 0; it < iters; ++it) {
    Eigen::VectorXd next = google * pr;
    const double change = (next - pr).cwiseAbs().sum();
    pr = next;
    if (change < tol) break;
  }
  return pr / pr.sum();
}

// Softmax(A relu(A X W1) W2) with A = D~^-1/2 (A+I) D~^-1/2, all dense.
inline Eigen::MatrixXd gcn_probs(const SparseGraph& g, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w1,
                                 const Eigen::MatrixXd& w2) {
  const auto n = static_cast<int>(g.num_nodes());
  const Eigen::MatrixXd a = sym_normalize(dense_adjacency(g) + Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd h = (a * x * w1).cwiseMax(0.0);
  Eigen::MatrixXd z = a * h * w2;
  for (int r = 0; r < z.rows(); ++r) {
    const double mx = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - mx).exp();
    z.row(r) /= z.row(r).sum();
  }
  return z;
}

// Mean NLL over `labeled` plus lambda * (|W1|^2 [+ |W2|^2]).
inline double gcn_loss(const SparseGraph& g, const Eigen::MatrixXd& x, const Eigen::MatrixXd& w1,
                       const Eigen::MatrixXd& w2, const std::vector<std::pair<NodeId, int>>& labeled, double lambda,
                       bool all_layers) {
  const auto p = gcn_probs(g, x, w1, w2);
  double nll = 0.0;
  for (auto [v, c] : labeled) nll -= std::log(p(v, c));
  nll /= static_cast<double>(labeled.size());
  double reg = w1.squaredNorm();
  if (all_layers) reg += w2.squaredNorm();
  return nll + lambda * reg;
}

}  // namespace oracle
