#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "smartquery/dense.hpp"

namespace smartquery {

using NodeId = std::int32_t;
using ClassId = std::int32_t;

// Compressed sparse rows with real values.
struct CsrMatrix {
  std::size_t rows{0};
  std::size_t cols{0};
  std::vector<std::size_t> row_ptr{0};
  std::vector<NodeId> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return col_idx.size(); }
  Matrix to_dense() const;
};

// out = m * x
Matrix multiply(const CsrMatrix& m, const Matrix& x);
// out = m^T * x
Matrix multiply_transposed(const CsrMatrix& m, const Matrix& x);

// Undirected, unweighted graph in CSR form. Raw adjacency: no self-loops,
// no duplicate edges, symmetric.
class SparseGraph {
public:
  SparseGraph() = default;

  // Edges may be listed in either orientation and repeated; they are
  // symmetrized and deduplicated. Self-loops are dropped.
  static SparseGraph from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges);

  std::size_t num_nodes() const noexcept { return n_; }
  // Undirected pairs.
  std::size_t num_edges() const noexcept { return col_idx_.size() / 2; }

  std::span<const NodeId> neighbors(NodeId u) const {
    return {col_idx_.data() + row_ptr_[u], row_ptr_[u + 1] - row_ptr_[u]};
  }
  std::size_t degree(NodeId u) const { return row_ptr_[u + 1] - row_ptr_[u]; }
  const std::vector<std::size_t>& degrees() const noexcept { return degrees_; }
  const std::vector<std::size_t>& row_ptr() const noexcept { return row_ptr_; }
  const std::vector<NodeId>& col_idx() const noexcept { return col_idx_; }

  // Each undirected edge once, as (u, v) with u < v, sorted.
  std::vector<std::pair<NodeId, NodeId>> edge_list() const;

private:
  std::size_t n_{0};
  std::vector<std::size_t> row_ptr_{0};
  std::vector<NodeId> col_idx_;
  std::vector<std::size_t> degrees_;
};

// Dense n x d node features, with a cached sparse copy for products.
class FeatureMatrix {
public:
  FeatureMatrix() = default;
  explicit FeatureMatrix(Matrix data);

  std::size_t rows() const noexcept { return data_.rows(); }
  std::size_t dim() const noexcept { return data_.cols(); }
  const Matrix& dense() const noexcept { return data_; }
  const CsrMatrix& sparse() const noexcept { return sparse_; }

  // Each row scaled to unit L1 norm; zero rows stay zero.
  FeatureMatrix row_normalized() const;

private:
  Matrix data_;
  CsrMatrix sparse_;
};

enum class NormalizationKind {
  gcn_self_loop,    // D~^-1/2 (A + I) D~^-1/2
  plain_symmetric,  // D^-1/2 A D^-1/2, isolated rows zero
};

struct NormalizedAdjacency {
  NormalizationKind kind{NormalizationKind::plain_symmetric};
  CsrMatrix values;
};

NormalizedAdjacency normalize(const SparseGraph& g, NormalizationKind kind);

Matrix spmm(const NormalizedAdjacency& adj, const Matrix& m);

// On-disk dataset: meta.json, edges.tsv, features.tsv, labels.tsv.
struct Dataset {
  std::string name;
  SparseGraph graph;
  FeatureMatrix features;
  std::vector<ClassId> labels;
  int num_classes{0};
};

class BundleError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

Dataset load_bundle(const std::filesystem::path& dir);
void save_bundle(const Dataset& ds, const std::filesystem::path& dir);

// LINQS plain-text pair: <id> <features...> <label> per line in .content,
// <cited> <citing> per line in .cites. String ids are mapped to dense ids in
// first-seen order; class names likewise. Citations naming unknown papers
// are skipped.
Dataset load_linqs(const std::filesystem::path& content, const std::filesystem::path& cites);

// Accepts a canonical bundle directory or a directory holding exactly one
// *.content / *.cites pair.
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace smartquery
