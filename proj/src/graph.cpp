#include "smartquery/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace smartquery {

namespace fs = std::filesystem;

Matrix CsrMatrix::to_dense() const {
  Matrix out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t e = row_ptr[r]; e < row_ptr[r + 1]; ++e) out(r, col_idx[e]) += values[e];
  }
  return out;
}

Matrix multiply(const CsrMatrix& m, const Matrix& x) {
  if (m.cols != x.rows()) throw ShapeError("spmm: matrix has " + std::to_string(m.cols) +
                                           " columns, operand has " + std::to_string(x.rows()) + " rows");
  Matrix out(m.rows, x.cols());
  const std::size_t w = x.cols();
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto dst = out.row(r);
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) {
      const double v = m.values[e];
      auto src = x.row(static_cast<std::size_t>(m.col_idx[e]));
      for (std::size_t j = 0; j < w; ++j) dst[j] += v * src[j];
    }
  }
  return out;
}

Matrix multiply_transposed(const CsrMatrix& m, const Matrix& x) {
  if (m.rows != x.rows()) throw ShapeError("spmm^T: row counts differ");
  Matrix out(m.cols, x.cols());
  const std::size_t w = x.cols();
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto src = x.row(r);
    for (std::size_t e = m.row_ptr[r]; e < m.row_ptr[r + 1]; ++e) {
      const double v = m.values[e];
      auto dst = out.row(static_cast<std::size_t>(m.col_idx[e]));
      for (std::size_t j = 0; j < w; ++j) dst[j] += v * src[j];
    }
  }
  return out;
}

SparseGraph SparseGraph::from_edges(std::size_t n, std::span<const std::pair<NodeId, NodeId>> edges) {
  std::vector<std::pair<NodeId, NodeId>> directed;
  directed.reserve(edges.size() * 2);
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
      throw BundleError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                        ") out of range for " + std::to_string(n) + " nodes");
    }
    if (u == v) continue;
    directed.emplace_back(u, v);
    directed.emplace_back(v, u);
  }
  std::sort(directed.begin(), directed.end());
  directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

  SparseGraph g;
  g.n_ = n;
  g.row_ptr_.assign(n + 1, 0);
  g.col_idx_.reserve(directed.size());
  for (auto [u, v] : directed) {
    ++g.row_ptr_[static_cast<std::size_t>(u) + 1];
    g.col_idx_.push_back(v);
  }
  for (std::size_t i = 0; i < n; ++i) g.row_ptr_[i + 1] += g.row_ptr_[i];
  g.degrees_.resize(n);
  for (std::size_t i = 0; i < n; ++i) g.degrees_[i] = g.row_ptr_[i + 1] - g.row_ptr_[i];
  return g;
}

std::vector<std::pair<NodeId, NodeId>> SparseGraph::edge_list() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges());
  for (std::size_t u = 0; u < n_; ++u) {
    for (NodeId v : neighbors(static_cast<NodeId>(u))) {
      if (static_cast<NodeId>(u) < v) out.emplace_back(static_cast<NodeId>(u), v);
    }
  }
  return out;
}

FeatureMatrix::FeatureMatrix(Matrix data) : data_(std::move(data)) {
  if (!data_.all_finite()) throw BundleError("feature matrix contains non-finite entries");
  sparse_.rows = data_.rows();
  sparse_.cols = data_.cols();
  sparse_.row_ptr.assign(data_.rows() + 1, 0);
  for (std::size_t r = 0; r < data_.rows(); ++r) {
    auto row = data_.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (row[c] != 0.0) {
        sparse_.col_idx.push_back(static_cast<NodeId>(c));
        sparse_.values.push_back(row[c]);
      }
    }
    sparse_.row_ptr[r + 1] = sparse_.col_idx.size();
  }
}

FeatureMatrix FeatureMatrix::row_normalized() const {
  Matrix out = data_;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    double s = 0.0;
    for (double v : row) s += std::abs(v);
    if (s > 0.0) {
      for (double& v : row) v /= s;
    }
  }
  return FeatureMatrix(std::move(out));
}

NormalizedAdjacency normalize(const SparseGraph& g, NormalizationKind kind) {
  const std::size_t n = g.num_nodes();
  const bool loops = kind == NormalizationKind::gcn_self_loop;
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(g.degrees()[i]) + (loops ? 1.0 : 0.0);
    inv_sqrt[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
  }

  NormalizedAdjacency out;
  out.kind = kind;
  CsrMatrix& m = out.values;
  m.rows = m.cols = n;
  m.row_ptr.assign(n + 1, 0);
  m.col_idx.reserve(g.col_idx().size() + (loops ? n : 0));
  m.values.reserve(m.col_idx.capacity());
  for (std::size_t i = 0; i < n; ++i) {
    const auto u = static_cast<NodeId>(i);
    bool placed_loop = !loops;
    for (NodeId v : g.neighbors(u)) {
      if (!placed_loop && v > u) {
        m.col_idx.push_back(u);
        m.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
        placed_loop = true;
      }
      m.col_idx.push_back(v);
      m.values.push_back(inv_sqrt[i] * inv_sqrt[static_cast<std::size_t>(v)]);
    }
    if (!placed_loop) {
      m.col_idx.push_back(u);
      m.values.push_back(inv_sqrt[i] * inv_sqrt[i]);
    }
    m.row_ptr[i + 1] = m.col_idx.size();
  }
  return out;
}

Matrix spmm(const NormalizedAdjacency& adj, const Matrix& m) { return multiply(adj.values, m); }

// ---------------------------------------------------------------------------
// Bundle I/O

namespace {

std::ifstream open_input(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw BundleError("cannot open " + p.string());
  return in;
}

std::ofstream open_output(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw BundleError("cannot write " + p.string());
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == '\t' || line[i] == ' ' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != '\t' && line[j] != ' ' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view tok, const fs::path& file, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw BundleError(file.string() + ":" + std::to_string(line_no) + ": bad number '" +
                      std::string(tok) + "'");
  }
  return value;
}

}  // namespace

Dataset load_bundle(const fs::path& dir) {
  for (const char* part : {"meta.json", "edges.tsv", "features.tsv", "labels.tsv"}) {
    if (!fs::exists(dir / part)) throw BundleError("bundle " + dir.string() + " is missing " + part);
  }

  nlohmann::json meta;
  {
    auto in = open_input(dir / "meta.json");
    try {
      in >> meta;
    } catch (const nlohmann::json::exception& e) {
      throw BundleError("meta.json: " + std::string(e.what()));
    }
  }
  Dataset ds;
  ds.name = meta.value("name", dir.filename().string());
  const auto n = meta.at("n").get<std::size_t>();
  const auto d = meta.at("d").get<std::size_t>();
  ds.num_classes = meta.at("k").get<int>();

  std::string line;
  {
    const fs::path file = dir / "labels.tsv";
    auto in = open_input(file);
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto toks = split_ws(line);
      if (toks.empty()) continue;
      const auto c = parse_number<ClassId>(toks[0], file, line_no);
      if (c < 0 || c >= ds.num_classes) {
        throw BundleError(file.string() + ":" + std::to_string(line_no) + ": class " + std::to_string(c) +
                          " outside [0, " + std::to_string(ds.num_classes) + ") declared in meta.json");
      }
      ds.labels.push_back(c);
    }
    if (ds.labels.size() != n) {
      throw BundleError("labels.tsv has " + std::to_string(ds.labels.size()) + " rows, meta.json says n=" +
                        std::to_string(n));
    }
  }

  {
    const fs::path file = dir / "features.tsv";
    auto in = open_input(file);
    std::vector<double> values;
    values.reserve(n * d);
    std::size_t line_no = 0;
    std::size_t row_count = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto toks = split_ws(line);
      if (toks.empty()) continue;
      if (toks.size() != d) {
        throw BundleError(file.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(d) +
                          " values, found " + std::to_string(toks.size()));
      }
      for (auto t : toks) values.push_back(parse_number<double>(t, file, line_no));
      ++row_count;
    }
    if (row_count != n) {
      throw BundleError("features.tsv has " + std::to_string(row_count) + " rows, meta.json says n=" +
                        std::to_string(n));
    }
    ds.features = FeatureMatrix(Matrix(n, d, std::move(values)));
  }

  {
    const fs::path file = dir / "edges.tsv";
    auto in = open_input(file);
    std::vector<std::pair<NodeId, NodeId>> edges;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto toks = split_ws(line);
      if (toks.empty()) continue;
      if (toks.size() != 2) {
        throw BundleError(file.string() + ":" + std::to_string(line_no) + ": expected two node ids");
      }
      const auto u = parse_number<long long>(toks[0], file, line_no);
      const auto v = parse_number<long long>(toks[1], file, line_no);
      if (u < 0 || v < 0 || static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
        throw BundleError(file.string() + ":" + std::to_string(line_no) + ": node id out of range [0, " +
                          std::to_string(n) + ")");
      }
      edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
    ds.graph = SparseGraph::from_edges(n, edges);
  }
  return ds;
}

void save_bundle(const Dataset& ds, const fs::path& dir) {
  fs::create_directories(dir);
  const std::size_t n = ds.graph.num_nodes();
  {
    nlohmann::json meta = {{"name", ds.name}, {"n", n}, {"d", ds.features.dim()}, {"k", ds.num_classes}};
    auto out = open_output(dir / "meta.json");
    out << meta.dump(2) << '\n';
  }
  {
    auto out = open_output(dir / "edges.tsv");
    for (auto [u, v] : ds.graph.edge_list()) out << u << '\t' << v << '\n';
  }
  {
    auto out = open_output(dir / "features.tsv");
    char buf[64];
    const Matrix& x = ds.features.dense();
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto row = x.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        // %.17g round-trips every double exactly.
        std::snprintf(buf, sizeof buf, "%.17g", row[c]);
        if (c) out << '\t';
        out << buf;
      }
      out << '\n';
    }
  }
  {
    auto out = open_output(dir / "labels.tsv");
    for (ClassId c : ds.labels) out << c << '\n';
  }
}

Dataset load_linqs(const fs::path& content, const fs::path& cites) {
  Dataset ds;
  ds.name = content.stem().string();
  std::unordered_map<std::string, NodeId> ids;
  std::unordered_map<std::string, ClassId> classes;
  std::vector<double> values;
  std::size_t d = 0;
  std::string line;
  {
    auto in = open_input(content);
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      auto toks = split_ws(line);
      if (toks.empty()) continue;
      if (toks.size() < 3) throw BundleError(content.string() + ":" + std::to_string(line_no) + ": too few fields");
      const std::size_t row_d = toks.size() - 2;
      if (d == 0) d = row_d;
      if (row_d != d) {
        throw BundleError(content.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(d) +
                          " features, found " + std::to_string(row_d));
      }
      auto [it, inserted] = ids.emplace(std::string(toks.front()), static_cast<NodeId>(ids.size()));
      if (!inserted) throw BundleError(content.string() + ":" + std::to_string(line_no) + ": duplicate paper id");
      for (std::size_t i = 1; i + 1 < toks.size(); ++i) values.push_back(parse_number<double>(toks[i], content, line_no));
      auto [cit, _] = classes.emplace(std::string(toks.back()), static_cast<ClassId>(classes.size()));
      ds.labels.push_back(cit->second);
    }
  }
  const std::size_t n = ids.size();
  ds.num_classes = static_cast<int>(classes.size());
  ds.features = FeatureMatrix(Matrix(n, d, std::move(values)));

  std::vector<std::pair<NodeId, NodeId>> edges;
  {
    auto in = open_input(cites);
    while (std::getline(in, line)) {
      auto toks = split_ws(line);
      if (toks.size() != 2) continue;
      auto a = ids.find(std::string(toks[0]));
      auto b = ids.find(std::string(toks[1]));
      if (a == ids.end() || b == ids.end()) continue;
      edges.emplace_back(a->second, b->second);
    }
  }
  ds.graph = SparseGraph::from_edges(n, edges);
  return ds;
}

Dataset load_dataset(const fs::path& dir) {
  if (fs::exists(dir / "meta.json")) return load_bundle(dir);
  fs::path content;
  fs::path cites;
  if (fs::is_directory(dir)) {
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.path().extension() == ".content") content = entry.path();
      if (entry.path().extension() == ".cites") cites = entry.path();
    }
  }
  if (content.empty() || cites.empty()) {
    throw BundleError(dir.string() + " is neither a bundle (meta.json) nor a .content/.cites directory");
  }
  return load_linqs(content, cites);
}

}  // namespace smartquery
