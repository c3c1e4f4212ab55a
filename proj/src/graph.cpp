#include "dpl/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cctype>
#include <fstream>
#include <optional>
#include <sstream>
#include <unordered_map>

namespace dpl {

SparseGraph SparseGraph::from_edges(std::size_t num_nodes,
                                    std::span<const std::pair<NodeId, NodeId>> edges) {
  SparseGraph g;
  g.num_nodes_ = num_nodes;

  std::vector<EdgeIndex> counts(num_nodes + 1, 0);
  for (const auto &[u, v] : edges) {
    if (u >= num_nodes || v >= num_nodes) {
      throw std::invalid_argument("edge endpoint out of range");
    }
    if (u == v) {
      ++g.dropped_self_loops_;
      continue;
    }
    ++counts[u + 1];
    ++counts[v + 1];
  }
  for (std::size_t i = 0; i < num_nodes; ++i) {
    counts[i + 1] += counts[i];
  }

  std::vector<NodeId> cols(counts.back());
  std::vector<EdgeIndex> cursor(counts.begin(), counts.end() - 1);
  for (const auto &[u, v] : edges) {
    if (u == v) {
      continue;
    }
    cols[cursor[u]++] = v;
    cols[cursor[v]++] = u;
  }

  // Sort and dedup each row, compacting in place.
  g.row_offsets_.assign(num_nodes + 1, 0);
  EdgeIndex write = 0;
  std::size_t removed = 0;
  for (std::size_t i = 0; i < num_nodes; ++i) {
    auto first = cols.begin() + static_cast<std::ptrdiff_t>(counts[i]);
    auto last = cols.begin() + static_cast<std::ptrdiff_t>(counts[i + 1]);
    std::sort(first, last);
    auto unique_end = std::unique(first, last);
    removed += static_cast<std::size_t>(last - unique_end);
    for (auto it = first; it != unique_end; ++it) {
      cols[write++] = *it;
    }
    g.row_offsets_[i + 1] = write;
  }
  cols.resize(write);
  g.col_indices_ = std::move(cols);
  // Each duplicate undirected pair was removed once from each endpoint row.
  g.dropped_duplicates_ = removed / 2;
  return g;
}

SparseGraph SparseGraph::from_csr(std::size_t num_nodes, std::vector<EdgeIndex> row_offsets,
                                  std::vector<NodeId> col_indices) {
  if (row_offsets.size() != num_nodes + 1 || row_offsets.front() != 0 ||
      row_offsets.back() != col_indices.size()) {
    throw std::invalid_argument("inconsistent CSR offsets");
  }
  SparseGraph g;
  g.num_nodes_ = num_nodes;
  g.row_offsets_ = std::move(row_offsets);
  g.col_indices_ = std::move(col_indices);
  if (auto why = g.invariant_violation(); !why.empty()) {
    throw std::invalid_argument("invalid CSR graph: " + why);
  }
  return g;
}

bool SparseGraph::has_edge(NodeId i, NodeId j) const {
  auto row = neighbors(i);
  return std::binary_search(row.begin(), row.end(), j);
}

std::string SparseGraph::invariant_violation() const {
  if (row_offsets_.size() != num_nodes_ + 1) {
    return "row_offsets length";
  }
  for (std::size_t i = 0; i < num_nodes_; ++i) {
    if (row_offsets_[i] > row_offsets_[i + 1]) {
      return "row_offsets not monotone at row " + std::to_string(i);
    }
    auto row = neighbors(static_cast<NodeId>(i));
    for (std::size_t p = 0; p < row.size(); ++p) {
      const NodeId j = row[p];
      if (j >= num_nodes_) {
        return "column out of range in row " + std::to_string(i);
      }
      if (j == i) {
        return "self-loop at " + std::to_string(i);
      }
      if (p > 0 && row[p - 1] >= j) {
        return "row " + std::to_string(i) + " not strictly increasing";
      }
      if (!has_edge(j, static_cast<NodeId>(i))) {
        return "asymmetric pair (" + std::to_string(i) + ", " + std::to_string(j) + ")";
      }
    }
  }
  return {};
}

std::vector<std::pair<NodeId, NodeId>> SparseGraph::edge_list() const {
  std::vector<std::pair<NodeId, NodeId>> out;
  out.reserve(num_edges());
  for (NodeId i = 0; i < num_nodes_; ++i) {
    for (NodeId j : neighbors(i)) {
      if (i < j) {
        out.emplace_back(i, j);
      }
    }
  }
  return out;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto *ws = " \t\r\n\v\f";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) {
    return {};
  }
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

bool parse_int(std::string_view token, std::int64_t &out) {
  const auto *end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Recognizes "# nodes: N" / "# Nodes: N ..." headers.
std::optional<std::int64_t> nodes_header(std::string_view comment) {
  std::string lowered(comment);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const auto pos = lowered.find("nodes:");
  if (pos == std::string::npos) {
    return std::nullopt;
  }
  std::istringstream in(lowered.substr(pos + 6));
  std::int64_t n = -1;
  if (in >> n && n >= 0) {
    return n;
  }
  return std::nullopt;
}

} // namespace

LoadedGraph parse_edge_list(std::string_view text) {
  std::vector<std::pair<std::int64_t, std::int64_t>> raw;
  std::optional<std::int64_t> declared_nodes;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) {
      nl = text.size();
    }
    ++line_no;
    auto line = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    if (line.empty()) {
      continue;
    }
    if (line.front() == '#') {
      if (!declared_nodes) {
        declared_nodes = nodes_header(line.substr(1));
      }
      continue;
    }
    const auto split = line.find_first_of(" \t");
    if (split == std::string_view::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": expected two node ids", line_no);
    }
    const auto first = line.substr(0, split);
    const auto second = trim(line.substr(split));
    std::int64_t u = 0;
    std::int64_t v = 0;
    if (!parse_int(first, u) || !parse_int(second, v) || u < 0 || v < 0) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed edge '" +
                           std::string(line) + "'",
                       line_no);
    }
    raw.emplace_back(u, v);
  }
  if (raw.empty()) {
    throw ParseError("edge list contains no edges", line_no);
  }

  LoadedGraph out;
  bool identity = false;
  if (declared_nodes) {
    identity = std::all_of(raw.begin(), raw.end(), [&](const auto &e) {
      return e.first >= 0 && e.second >= 0 && e.first < *declared_nodes && e.second < *declared_nodes;
    });
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  edges.reserve(raw.size());
  if (identity) {
    out.original_ids.resize(static_cast<std::size_t>(*declared_nodes));
    for (std::size_t i = 0; i < out.original_ids.size(); ++i) {
      out.original_ids[i] = static_cast<std::int64_t>(i);
    }
    for (const auto &[u, v] : raw) {
      edges.emplace_back(static_cast<NodeId>(u), static_cast<NodeId>(v));
    }
  } else {
    std::vector<std::int64_t> ids;
    ids.reserve(raw.size() * 2);
    for (const auto &[u, v] : raw) {
      ids.push_back(u);
      ids.push_back(v);
    }
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    auto compact = [&](std::int64_t id) {
      return static_cast<NodeId>(std::lower_bound(ids.begin(), ids.end(), id) - ids.begin());
    };
    for (const auto &[u, v] : raw) {
      edges.emplace_back(compact(u), compact(v));
    }
    out.original_ids = std::move(ids);
  }
  out.graph = SparseGraph::from_edges(out.original_ids.size(), edges);
  return out;
}

LoadedGraph load_edge_list(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("cannot open edge list " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_edge_list(buf.str());
}

void write_edge_list(const SparseGraph &g, const std::filesystem::path &path,
                     std::span<const std::int64_t> original_ids) {
  if (!original_ids.empty() && original_ids.size() != g.num_nodes()) {
    throw std::invalid_argument("original id map size does not match graph");
  }
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << "# nodes: " << g.num_nodes() << " edges: " << g.num_edges() << '\n';
  auto id = [&](NodeId i) -> std::int64_t {
    return original_ids.empty() ? static_cast<std::int64_t>(i) : original_ids[i];
  };
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    for (NodeId j : g.neighbors(i)) {
      if (i < j) {
        out << id(i) << '\t' << id(j) << '\n';
      }
    }
  }
}

DegreeSummary degree_summary(const SparseGraph &g) {
  const std::size_t n = g.num_nodes();
  if (n < 2) {
    throw std::invalid_argument("degree summary needs at least two nodes");
  }
  DegreeSummary s;
  s.per_node_degree.resize(n);
  for (NodeId i = 0; i < n; ++i) {
    s.per_node_degree[i] = g.degree(i);
  }
  const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
  s.density = static_cast<double>(g.num_edges()) / pairs;
  s.average_degree = 2.0 * static_cast<double>(g.num_edges()) / static_cast<double>(n);
  return s;
}

} // namespace dpl
