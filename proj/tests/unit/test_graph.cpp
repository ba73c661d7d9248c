#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "oracles.hpp"
#include "smartquery/graph.hpp"
#include "smartquery/synthetic.hpp"

using namespace smartquery;
namespace fs = std::filesystem;

namespace {

SparseGraph one_edge() {
  const std::pair<NodeId, NodeId> e[] = {{0, 1}};
  return SparseGraph::from_edges(2, e);
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

fs::path tiny_bundle(const std::string& name, const std::string& edges) {
  const auto dir = fs::temp_directory_path() / ("sq_graph_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  write(dir / "meta.json", R"({"name":"tiny","n":3,"d":2,"k":2})");
  write(dir / "edges.tsv", edges);
  write(dir / "features.tsv", "1\t0\n0\t1\n0.5\t0.5\n");
  write(dir / "labels.tsv", "0\n1\n1\n");
  return dir;
}

}  // namespace

TEST_CASE("symmetrization and dedup") {
  const auto g = one_edge();
  CHECK(g.degrees() == std::vector<std::size_t>{1, 1});
  CHECK(g.num_edges() == 1);

  const std::pair<NodeId, NodeId> dup[] = {{0, 1}, {1, 0}, {0, 1}, {2, 2}, {1, 2}};
  const auto h = SparseGraph::from_edges(3, dup);
  CHECK(h.num_edges() == 2);
  CHECK(h.degree(2) == 1);  // self-loop dropped
  for (NodeId u = 0; u < 3; ++u) {
    for (NodeId v : h.neighbors(u)) {
      const auto back = h.neighbors(v);
      CHECK(std::find(back.begin(), back.end(), u) != back.end());
    }
  }
  const std::pair<NodeId, NodeId> bad[] = {{0, 3}};
  CHECK_THROWS_AS(SparseGraph::from_edges(3, bad), BundleError);
}

TEST_CASE("normalize: two-node cases") {
  const auto g = one_edge();
  const auto gcn = normalize(g, NormalizationKind::gcn_self_loop).values.to_dense();
  for (double v : gcn.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
  const auto plain = normalize(g, NormalizationKind::plain_symmetric).values.to_dense();
  CHECK(plain(0, 1) == 1.0);
  CHECK(plain(1, 0) == 1.0);
  CHECK(plain(0, 0) == 0.0);
  CHECK(plain(1, 1) == 0.0);
}

TEST_CASE("normalize matches the dense oracle on random graphs") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    const auto g = oracle::random_graph(20, 0.15, rng, /*isolated=*/trial % 2 == 0);
    const auto a = oracle::dense_adjacency(g);
    const auto plain = oracle::to_eigen(normalize(g, NormalizationKind::plain_symmetric).values.to_dense());
    CHECK((plain - oracle::sym_normalize(a)).cwiseAbs().maxCoeff() < 1e-12);

    const Eigen::MatrixXd loops = a + Eigen::MatrixXd::Identity(20, 20);
    const auto gcn = oracle::to_eigen(normalize(g, NormalizationKind::gcn_self_loop).values.to_dense());
    CHECK((gcn - oracle::sym_normalize(loops)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((gcn - gcn.transpose()).cwiseAbs().maxCoeff() == 0.0);
    // Row sums can exceed 1; the operator is bounded by its spectral radius of 1.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gcn);
    CHECK(eig.eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));
    for (int i = 0; i < 20; ++i) {
      for (int j = 0; j < 20; ++j) {
        if (gcn(i, j) != 0.0) CHECK((gcn(i, j) > 0.0 && gcn(i, j) <= 1.0));
      }
    }
    // Isolated nodes have zero rows in the plain variant.
    for (std::size_t i = 0; i < 20; ++i) {
      if (g.degree(static_cast<NodeId>(i)) == 0) CHECK(plain.row(static_cast<int>(i)).cwiseAbs().sum() == 0.0);
    }
  }
}

TEST_CASE("spmm") {
  // Edgeless graph with self loops is the identity.
  const auto empty = SparseGraph::from_edges(3, {});
  const auto eye = normalize(empty, NormalizationKind::gcn_self_loop);
  Matrix m(3, 2, {1, 2, 3, 4, 5, 6});
  CHECK(spmm(eye, m) == m);

  const auto half = normalize(one_edge(), NormalizationKind::gcn_self_loop);
  const auto out = spmm(half, Matrix(2, 2, {1, 0, 0, 1}));
  for (double v : out.data()) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(spmm(half, Matrix(3, 2)), ShapeError);

  Rng rng(5);
  const auto g = oracle::random_graph(30, 0.2, rng, true);
  const auto adj = normalize(g, NormalizationKind::plain_symmetric);
  const auto x = oracle::random_matrix(30, 4, rng);
  const auto y = oracle::random_matrix(30, 4, rng);
  const Eigen::MatrixXd dense = oracle::to_eigen(adj.values.to_dense());
  CHECK((oracle::to_eigen(spmm(adj, x)) - dense * oracle::to_eigen(x)).cwiseAbs().maxCoeff() < 1e-12);
  // Distributes over addition.
  CHECK(max_abs_diff(spmm(adj, x + y), spmm(adj, x) + spmm(adj, y)) < 1e-12);
}

TEST_CASE("load_bundle: symmetrizes one-way edge lists and ignores duplicates") {
  const auto a = load_bundle(tiny_bundle("a", "0\t1\n"));
  CHECK(a.graph.num_nodes() == 3);
  CHECK(a.graph.degree(0) == 1);
  CHECK(a.graph.degree(1) == 1);
  CHECK(a.num_classes == 2);
  CHECK(a.features.dim() == 2);

  const auto b = load_bundle(tiny_bundle("b", "0\t1\n1\t2\n"));
  const auto c = load_bundle(tiny_bundle("c", "0\t1\n1\t0\n1\t2\n2\t1\n1\t2\n"));
  CHECK(b.graph.edge_list() == c.graph.edge_list());
}

TEST_CASE("load_bundle error paths") {
  auto dir = tiny_bundle("missing", "0\t1\n");
  fs::remove(dir / "labels.tsv");
  CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("labels.tsv"), BundleError);

  dir = tiny_bundle("range", "0\t7\n");
  CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("out of range"), BundleError);

  dir = tiny_bundle("ragged", "0\t1\n");
  write(dir / "features.tsv", "1\t0\n0\n0.5\t0.5\n");
  CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("expected 2 values"), BundleError);

  dir = tiny_bundle("kmismatch", "0\t1\n");
  write(dir / "labels.tsv", "0\n1\n2\n");
  CHECK_THROWS_WITH_AS(load_bundle(dir), doctest::Contains("class 2"), BundleError);
}

TEST_CASE("save_bundle then load_bundle is the identity") {
  SyntheticSpec spec;
  spec.nodes = 80;
  spec.classes = 3;
  spec.feature_dim = 12;
  auto ds = synthetic_dataset(spec, 3);
  // Non-representable decimals exercise the 17-digit formatting.
  Matrix x = ds.features.dense();
  Rng rng(9);
  for (double& v : x.data()) v = v * uniform01(rng) / 3.0;
  ds.features = FeatureMatrix(x);

  const auto dir = fs::temp_directory_path() / "sq_graph_roundtrip";
  fs::remove_all(dir);
  save_bundle(ds, dir);
  const auto back = load_bundle(dir);
  CHECK(back.graph.edge_list() == ds.graph.edge_list());
  CHECK(back.features.dense() == ds.features.dense());
  CHECK(back.labels == ds.labels);
  CHECK(back.num_classes == ds.num_classes);
}

TEST_CASE("LINQS loader maps string ids in first-seen order") {
  const auto dir = fs::temp_directory_path() / "sq_graph_linqs";
  fs::remove_all(dir);
  fs::create_directories(dir);
  write(dir / "toy.content", "p9\t1\t0\tTheory\np3\t0\t1\tAI\np5\t1\t1\tTheory\n");
  write(dir / "toy.cites", "p9\tp3\np3\tp5\np5\tmissing\n");
  const auto ds = load_dataset(dir);
  CHECK(ds.graph.num_nodes() == 3);
  CHECK(ds.num_classes == 2);
  CHECK(ds.labels == std::vector<ClassId>{0, 1, 0});
  CHECK(ds.graph.edge_list() == std::vector<std::pair<NodeId, NodeId>>{{0, 1}, {1, 2}});
  CHECK(ds.features.dense()(2, 1) == 1.0);
}

TEST_CASE("feature row normalization") {
  FeatureMatrix f(Matrix(2, 3, {1, 1, 2, 0, 0, 0}));
  const auto r = f.row_normalized();
  CHECK(r.dense()(0, 2) == 0.5);
  CHECK(r.dense()(1, 0) == 0.0);
  CHECK(f.sparse().nnz() == 3);
  CHECK_THROWS_AS(FeatureMatrix(Matrix(1, 1, {NAN})), BundleError);
}
