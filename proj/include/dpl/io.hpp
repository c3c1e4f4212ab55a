#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dpl/master.hpp"
#include "dpl/partition.hpp"
#include "dpl/types.hpp"

namespace dpl {

/// Writes "node_id<TAB>label" lines with labels shifted to 1..K.
void write_labels(const std::filesystem::path &path, std::span<const Label> labels,
                  std::span<const std::int64_t> original_ids = {});

/// Reads a label file and maps it onto compact node order. Every node in
/// original_ids must appear; labels are shifted back to zero-based.
LabelVector read_labels(const std::filesystem::path &path, std::span<const std::int64_t> original_ids);

/// Reads a label file in file order (node ids, zero-based labels).
std::vector<std::pair<std::int64_t, Label>> read_label_pairs(const std::filesystem::path &path);

/// Header "R n seed" followed by "node_id r_i w_i" lines (1-based block and position).
void write_partition(const std::filesystem::path &path, const IndexMap &map,
                     std::span<const std::int64_t> original_ids = {});

/// Parameters as JSON: {"model", "K", "pi", "lambda" or "psi"}.
std::string params_to_json(const ModelParams &params);

} // namespace dpl
