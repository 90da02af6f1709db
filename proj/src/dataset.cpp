#include "appcheck/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace appcheck {

std::string_view to_string(ActivityType type) {
  switch (type) {
    case ActivityType::Splash: return "Splash";
    case ActivityType::Advertisement: return "Advertisement";
    case ActivityType::Login: return "Login";
    case ActivityType::Portal: return "Portal";
    case ActivityType::Mail: return "Mail";
    case ActivityType::Browser: return "Browser";
    case ActivityType::TodoList: return "TodoList";
  }
  return "Splash";
}

std::optional<ActivityType> activity_type_from_string(std::string_view name) {
  for (ActivityType type : all_activity_types()) {
    if (to_string(type) == name) return type;
  }
  return std::nullopt;
}

namespace {

std::string format_number(double value) {
  char buffer[32];
  auto [end, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buffer, end);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cell);
      cell.clear();
    } else if (c != '\r') {
      cell.push_back(c);
    }
  }
  cells.push_back(cell);
  return cells;
}

}  // namespace

std::string write_dataset_csv(const LabeledDataset& dataset) {
  std::ostringstream out;
  const auto& names = features::feature_names();
  for (const std::string& name : names) out << name << ',';
  out << "label\n";
  for (const Instance& instance : dataset.instances) {
    for (double value : instance.features) out << format_number(value) << ',';
    out << to_string(instance.label) << '\n';
  }
  return out.str();
}

void write_dataset_file(const LabeledDataset& dataset, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << write_dataset_csv(dataset);
}

LabeledDataset read_dataset_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("dataset CSV: missing header row");
  }
  std::vector<std::string> header = split_row(line);
  if (header.size() != features::kFeatureCount + 1 || header.back() != "label") {
    throw std::runtime_error(
        "dataset CSV: header must list the 15 feature columns and \"label\"");
  }

  LabeledDataset dataset;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cells = split_row(line);
    if (cells.size() != features::kFeatureCount + 1) {
      throw std::runtime_error("dataset CSV row " + std::to_string(row) +
                               ": expected 16 columns, found " +
                               std::to_string(cells.size()));
    }
    Instance instance;
    for (int i = 0; i < features::kFeatureCount; ++i) {
      const std::string& cell = cells[i];
      double value = 0;
      auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw std::runtime_error("dataset CSV row " + std::to_string(row) +
                                 ": bad number \"" + cell + "\"");
      }
      instance.features[i] = value;
    }
    auto label = activity_type_from_string(cells.back());
    if (!label) {
      throw std::runtime_error("dataset CSV row " + std::to_string(row) +
                               ": unknown label \"" + cells.back() + "\"");
    }
    instance.label = *label;
    dataset.instances.push_back(instance);
  }
  return dataset;
}

LabeledDataset read_dataset_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return read_dataset_csv(buffer.str());
}

}  // namespace appcheck
