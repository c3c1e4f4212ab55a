#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dpl/types.hpp"

namespace dpl {

/// Raised by the edge-list reader; carries the 1-based line number of the offending line.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string &what, std::size_t line)
      : std::runtime_error(what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// Symmetric binary adjacency in compressed sparse row form. Immutable once built.
///
/// Every undirected edge {i, j} is stored twice (j in row i and i in row j).
/// Rows are strictly increasing and never contain their own index.
class SparseGraph {
public:
  SparseGraph() = default;

  /// Builds a graph from arbitrary (u, v) pairs: symmetrizes, drops self-loops,
  /// collapses duplicates. Every endpoint must be < num_nodes.
  static SparseGraph from_edges(std::size_t num_nodes, std::span<const std::pair<NodeId, NodeId>> edges);

  /// Takes ownership of already-valid CSR arrays. Throws std::invalid_argument when
  /// the arrays violate the graph invariants.
  static SparseGraph from_csr(std::size_t num_nodes, std::vector<EdgeIndex> row_offsets,
                              std::vector<NodeId> col_indices);

  [[nodiscard]] std::size_t num_nodes() const noexcept { return num_nodes_; }
  [[nodiscard]] std::size_t num_edges() const noexcept { return col_indices_.size() / 2; }
  [[nodiscard]] std::size_t degree(NodeId i) const noexcept {
    return static_cast<std::size_t>(row_offsets_[i + 1] - row_offsets_[i]);
  }
  [[nodiscard]] std::span<const NodeId> neighbors(NodeId i) const noexcept {
    return {col_indices_.data() + row_offsets_[i], degree(i)};
  }
  [[nodiscard]] bool has_edge(NodeId i, NodeId j) const;

  [[nodiscard]] std::span<const EdgeIndex> row_offsets() const noexcept { return row_offsets_; }
  [[nodiscard]] std::span<const NodeId> col_indices() const noexcept { return col_indices_; }

  /// Self-loops and duplicate directed pairs discarded during from_edges().
  [[nodiscard]] std::size_t dropped_self_loops() const noexcept { return dropped_self_loops_; }
  [[nodiscard]] std::size_t dropped_duplicates() const noexcept { return dropped_duplicates_; }

  /// Empty string when symmetry, sortedness, range and loop-freedom all hold;
  /// otherwise a description of the first violation.
  [[nodiscard]] std::string invariant_violation() const;

  /// Unordered edge list with u < v, sorted.
  [[nodiscard]] std::vector<std::pair<NodeId, NodeId>> edge_list() const;

private:
  std::size_t num_nodes_ = 0;
  std::vector<EdgeIndex> row_offsets_{0};
  std::vector<NodeId> col_indices_;
  std::size_t dropped_self_loops_ = 0;
  std::size_t dropped_duplicates_ = 0;
};

/// A graph read from disk together with the original node ids.
struct LoadedGraph {
  SparseGraph graph;
  /// original_ids[i] is the id used in the file for compact node i.
  std::vector<std::int64_t> original_ids;
};

/// Reads a SNAP-style edge list: one "u v" pair per line, '#' comments.
///
/// Node ids are compacted to 0..N-1 in increasing order of original id. When the
/// file carries a "# nodes: N" header and every id lies in [0, N), ids are kept
/// as-is so that isolated nodes survive a write/read round trip.
LoadedGraph load_edge_list(const std::filesystem::path &path);
LoadedGraph parse_edge_list(std::string_view text);

/// Writes "# nodes: N edges: M" followed by one "u<TAB>v" line per undirected
/// edge (u < v). original_ids, when non-empty, replaces compact ids on output.
void write_edge_list(const SparseGraph &g, const std::filesystem::path &path,
                     std::span<const std::int64_t> original_ids = {});

struct DegreeSummary {
  std::vector<std::size_t> per_node_degree;
  double density = 0.0;
  double average_degree = 0.0;
};

/// Throws std::invalid_argument for N < 2.
DegreeSummary degree_summary(const SparseGraph &g);

} // namespace dpl
