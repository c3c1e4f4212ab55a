#include "dpl/io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "json.hpp"

namespace dpl {

void write_labels(const std::filesystem::path &path, std::span<const Label> labels,
                  std::span<const std::int64_t> original_ids) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const std::int64_t id = original_ids.empty() ? static_cast<std::int64_t>(i) : original_ids[i];
    out << id << '\t' << labels[i] + 1 << '\n';
  }
}

std::vector<std::pair<std::int64_t, Label>> read_label_pairs(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open label file " + path.string());
  }
  std::vector<std::pair<std::int64_t, Label>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') {
      continue;
    }
    std::istringstream fields(line);
    std::int64_t id = 0;
    std::int64_t label = 0;
    if (!(fields >> id >> label) || label < 1) {
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": malformed label line");
    }
    out.emplace_back(id, static_cast<Label>(label - 1));
  }
  return out;
}

LabelVector read_labels(const std::filesystem::path &path, std::span<const std::int64_t> original_ids) {
  std::unordered_map<std::int64_t, std::size_t> index;
  for (std::size_t i = 0; i < original_ids.size(); ++i) {
    index.emplace(original_ids[i], i);
  }
  LabelVector labels(original_ids.size(), 0);
  std::vector<char> seen(original_ids.size(), 0);
  for (const auto &[id, label] : read_label_pairs(path)) {
    auto it = index.find(id);
    if (it == index.end()) {
      continue;
    }
    labels[it->second] = label;
    seen[it->second] = 1;
  }
  for (std::size_t i = 0; i < seen.size(); ++i) {
    if (!seen[i]) {
      throw std::runtime_error("label file " + path.string() + " has no entry for node " +
                               std::to_string(original_ids[i]));
    }
  }
  return labels;
}

void write_partition(const std::filesystem::path &path, const IndexMap &map,
                     std::span<const std::int64_t> original_ids) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << map.num_workers() << ' ' << map.block_size << ' ' << map.seed << '\n';
  for (std::size_t i = 0; i < map.num_nodes; ++i) {
    const std::int64_t id = original_ids.empty() ? static_cast<std::int64_t>(i) : original_ids[i];
    out << id << ' ' << map.block_of[i] + 1 << ' ' << map.local_of[i] + 1 << '\n';
  }
}

std::string params_to_json(const ModelParams &params) {
  nlohmann::json j;
  j["model"] = params.kind == ModelKind::sbm ? "sbm" : "dcsbm";
  j["K"] = params.num_blocks();
  j["pi"] = std::vector<double>(params.pi.data(), params.pi.data() + params.pi.size());
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index l = 0; l < params.rates.rows(); ++l) {
    std::vector<double> row(static_cast<std::size_t>(params.rates.cols()));
    for (Eigen::Index m = 0; m < params.rates.cols(); ++m) {
      row[static_cast<std::size_t>(m)] = params.rates(l, m);
    }
    rows.push_back(row);
  }
  j[params.kind == ModelKind::sbm ? "lambda" : "psi"] = rows;
  return j.dump(2);
}

} // namespace dpl
