#pragma once

#include <array>
#include <string>
#include <vector>

#include "appcheck/activity_type.hpp"
#include "appcheck/features.hpp"

namespace appcheck {

struct Instance {
  std::array<double, features::kFeatureCount> features{};
  ActivityType label = ActivityType::Splash;

  bool operator==(const Instance&) const = default;
};

struct LabeledDataset {
  std::vector<Instance> instances;

  bool empty() const { return instances.empty(); }
  size_t size() const { return instances.size(); }

  bool operator==(const LabeledDataset&) const = default;
};

/// Serializes a dataset as CSV: a header row with the 15 feature names plus
/// "label", then one row per instance. Numbers use shortest round-trip
/// formatting, so write/read is an exact round trip.
std::string write_dataset_csv(const LabeledDataset& dataset);
void write_dataset_file(const LabeledDataset& dataset, const std::string& path);

/// Parses the CSV form. Rows with the wrong column count or an unknown label
/// raise std::runtime_error naming the 1-based row number.
LabeledDataset read_dataset_csv(const std::string& text);
LabeledDataset read_dataset_file(const std::string& path);

}  // namespace appcheck
