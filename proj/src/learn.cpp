#include "appcheck/learn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace appcheck::learn {

namespace {

void require_blend(double blend) {
  if (!(blend >= 0.0 && blend <= 100.0)) {
    throw std::invalid_argument("blend must lie in [0, 100]");
  }
}

void require_query(std::span<const double> query) {
  if (query.size() != features::kFeatureCount) {
    throw std::invalid_argument("query must have 15 features");
  }
  for (double v : query) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("query contains a non-finite value");
    }
  }
}

// Deterministic Fisher-Yates; avoids std::shuffle's implementation-defined
// use of the generator.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    size_t j = static_cast<size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

double entropy_bits(const std::vector<int>& counts, int total) {
  if (total <= 0) return 0.0;
  double h = 0.0;
  for (int c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / total;
    h -= p * std::log2(p);
  }
  return h;
}

int distinct_classes(const std::vector<int>& counts) {
  int k = 0;
  for (int c : counts) {
    if (c > 0) ++k;
  }
  return k;
}

}  // namespace

KStarModel kstar_train(LabeledDataset dataset, double blend) {
  if (dataset.empty()) {
    throw std::invalid_argument("kstar_train: dataset is empty");
  }
  require_blend(blend);
  return KStarModel{std::move(dataset), blend};
}

double effective_count(std::span<const double> distances, double scale) {
  if (!(scale > 0.0)) {
    throw std::invalid_argument("effective_count: scale must be positive");
  }
  double dmin = *std::min_element(distances.begin(), distances.end());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double d : distances) {
    // Normalizing by the minimal distance keeps the largest weight at 1;
    // (sum w)^2 / (sum w^2) is invariant under the common factor.
    double w = std::exp(-(d - dmin) / scale);
    sum += w;
    sum_sq += w * w;
  }
  return sum * sum / sum_sq;
}

double solve_kernel_scale(std::span<const double> distances, double target,
                          double tol) {
  double dmin = *std::min_element(distances.begin(), distances.end());
  double dmax = *std::max_element(distances.begin(), distances.end());
  if (!(dmax > dmin)) {
    throw std::invalid_argument("solve_kernel_scale: distances are all equal");
  }
  double n = static_cast<double>(distances.size());
  double n0 = static_cast<double>(
      std::count(distances.begin(), distances.end(), dmin));
  target = std::clamp(target, n0, n);

  double span = dmax - dmin;
  double lo = span * 1e-12;
  double hi = span * 1e6;
  while (lo > 1e-300 && effective_count(distances, lo) > target + tol) lo *= 0.125;
  while (hi < 1e300 && effective_count(distances, hi) < target - tol) hi *= 8.0;

  double mid = std::sqrt(lo * hi);
  for (int iteration = 0; iteration < 300; ++iteration) {
    mid = std::sqrt(lo * hi);
    double m = effective_count(distances, mid);
    if (std::abs(m - target) <= tol) return mid;
    if (m < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= lo * 1e-15) break;
  }
  return mid;
}

std::array<double, features::kFeatureCount> kstar_attribute_scales(
    const KStarModel& model, std::span<const double> query) {
  require_query(query);
  const auto& instances = model.training.instances;
  size_t n = instances.size();

  std::array<double, features::kFeatureCount> scales{};
  std::vector<double> distances(n);
  for (int j = 0; j < features::kFeatureCount; ++j) {
    for (size_t i = 0; i < n; ++i) {
      distances[i] = std::abs(instances[i].features[j] - query[j]);
    }
    double dmin = *std::min_element(distances.begin(), distances.end());
    double dmax = *std::max_element(distances.begin(), distances.end());
    if (dmax == dmin) {
      scales[j] = 0.0;  // all weights fixed at 1 for this attribute
      continue;
    }
    double n0 = static_cast<double>(
        std::count(distances.begin(), distances.end(), dmin));
    double target = n0 + model.blend / 100.0 * (static_cast<double>(n) - n0);
    scales[j] = solve_kernel_scale(distances, target);
  }
  return scales;
}

Prediction kstar_predict(const KStarModel& model, std::span<const double> query) {
  if (model.training.empty()) {
    throw std::invalid_argument("kstar_predict: model has no training data");
  }
  require_blend(model.blend);
  require_query(query);

  const auto& instances = model.training.instances;
  size_t n = instances.size();
  auto scales = kstar_attribute_scales(model, query);

  // Minimal per-attribute distances, for the underflow-free normalization.
  std::array<double, features::kFeatureCount> dmin{};
  for (int j = 0; j < features::kFeatureCount; ++j) {
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < n; ++i) {
      best = std::min(best, std::abs(instances[i].features[j] - query[j]));
    }
    dmin[j] = best;
  }

  std::vector<double> log_weight(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < features::kFeatureCount; ++j) {
      if (scales[j] <= 0.0) continue;  // attribute contributes weight 1
      double d = std::abs(instances[i].features[j] - query[j]);
      acc -= (d - dmin[j]) / scales[j];
    }
    log_weight[i] = acc;
  }
  double max_log = *std::max_element(log_weight.begin(), log_weight.end());

  Prediction prediction;
  for (size_t i = 0; i < n; ++i) {
    prediction.class_scores[static_cast<int>(instances[i].label)] +=
        std::exp(log_weight[i] - max_log);
  }
  double total = std::accumulate(prediction.class_scores.begin(),
                                 prediction.class_scores.end(), 0.0);
  for (double& score : prediction.class_scores) score /= total;

  int best = 0;
  for (int c = 1; c < kActivityTypeCount; ++c) {
    if (prediction.class_scores[c] > prediction.class_scores[best]) best = c;
  }
  prediction.label = static_cast<ActivityType>(best);
  return prediction;
}

ActivityType knn_predict(const LabeledDataset& dataset,
                         std::span<const double> query, int k) {
  require_query(query);
  int n = static_cast<int>(dataset.size());
  if (k < 1 || k > n) {
    throw std::invalid_argument("knn_predict: k must lie in [1, N]");
  }

  std::vector<std::pair<double, int>> order(n);
  for (int i = 0; i < n; ++i) {
    double sq = 0.0;
    for (int j = 0; j < features::kFeatureCount; ++j) {
      double diff = dataset.instances[i].features[j] - query[j];
      sq += diff * diff;
    }
    order[i] = {sq, i};
  }
  // Distance ties break by instance order.
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });

  std::array<int, kActivityTypeCount> votes{};
  for (int i = 0; i < k; ++i) {
    votes[static_cast<int>(dataset.instances[order[i].second].label)] += 1;
  }
  int best = 0;
  for (int c = 1; c < kActivityTypeCount; ++c) {
    if (votes[c] > votes[best]) best = c;
  }
  return static_cast<ActivityType>(best);
}

ActivityType majority_predict(const LabeledDataset& dataset) {
  if (dataset.empty()) {
    throw std::invalid_argument("majority_predict: dataset is empty");
  }
  std::array<int, kActivityTypeCount> counts{};
  for (const Instance& instance : dataset.instances) {
    counts[static_cast<int>(instance.label)] += 1;
  }
  int best = 0;
  for (int c = 1; c < kActivityTypeCount; ++c) {
    if (counts[c] > counts[best]) best = c;
  }
  return static_cast<ActivityType>(best);
}

std::vector<std::vector<int>> stratified_folds(const LabeledDataset& dataset,
                                               int folds, std::uint64_t seed) {
  if (folds < 2) {
    throw std::invalid_argument("stratified_folds: need at least 2 folds");
  }
  if (static_cast<size_t>(folds) > dataset.size()) {
    throw std::invalid_argument("stratified_folds: more folds than instances");
  }

  std::mt19937_64 rng(seed);
  std::vector<std::vector<int>> fold_indices(folds);
  for (ActivityType type : all_activity_types()) {
    std::vector<int> members;
    for (size_t i = 0; i < dataset.size(); ++i) {
      if (dataset.instances[i].label == type) members.push_back(static_cast<int>(i));
    }
    deterministic_shuffle(members, rng);
    for (size_t i = 0; i < members.size(); ++i) {
      fold_indices[i % folds].push_back(members[i]);
    }
  }
  return fold_indices;
}

double cross_validate(const LabeledDataset& dataset, const ClassifierFactory& factory,
                      int folds, std::uint64_t seed) {
  auto fold_indices = stratified_folds(dataset, folds, seed);

  std::vector<char> in_test(dataset.size(), 0);
  int correct = 0;
  for (const std::vector<int>& test : fold_indices) {
    if (test.empty()) continue;
    std::fill(in_test.begin(), in_test.end(), 0);
    for (int i : test) in_test[i] = 1;

    LabeledDataset train;
    train.instances.reserve(dataset.size() - test.size());
    for (size_t i = 0; i < dataset.size(); ++i) {
      if (!in_test[i]) train.instances.push_back(dataset.instances[i]);
    }
    TrainedClassifier classify = factory(train);
    for (int i : test) {
      if (classify(dataset.instances[i].features) == dataset.instances[i].label) {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(dataset.size());
}

// ---------------------------------------------------------------------------
// Information gain with MDL discretization
// ---------------------------------------------------------------------------

namespace {

struct SortedColumn {
  std::vector<double> values;
  std::vector<int> labels;
};

// Recursive binary splitting on the half-open range [begin, end).
void mdl_split(const SortedColumn& column, int begin, int end,
               std::vector<double>& cuts) {
  int n = end - begin;
  if (n < 2) return;

  std::vector<int> total_counts(kActivityTypeCount, 0);
  for (int i = begin; i < end; ++i) total_counts[column.labels[i]] += 1;
  int k = distinct_classes(total_counts);
  if (k < 2) return;
  double entropy_total = entropy_bits(total_counts, n);

  int best_position = -1;
  double best_gain = 0.0;
  double best_e1 = 0.0, best_e2 = 0.0;
  int best_k1 = 0, best_k2 = 0;

  std::vector<int> left_counts(kActivityTypeCount, 0);
  std::vector<int> right_counts = total_counts;
  for (int i = begin; i < end - 1; ++i) {
    left_counts[column.labels[i]] += 1;
    right_counts[column.labels[i]] -= 1;
    if (!(column.values[i] < column.values[i + 1])) continue;  // no boundary here

    int n1 = i + 1 - begin;
    int n2 = end - i - 1;
    double e1 = entropy_bits(left_counts, n1);
    double e2 = entropy_bits(right_counts, n2);
    double gain = entropy_total - (n1 * e1 + n2 * e2) / n;
    if (best_position < 0 || gain > best_gain) {
      best_position = i;
      best_gain = gain;
      best_e1 = e1;
      best_e2 = e2;
      best_k1 = distinct_classes(left_counts);
      best_k2 = distinct_classes(right_counts);
    }
  }
  if (best_position < 0) return;  // constant within the range

  double threshold =
      (std::log2(static_cast<double>(n - 1)) + std::log2(std::pow(3.0, k) - 2.0) -
       k * entropy_total + best_k1 * best_e1 + best_k2 * best_e2) /
      n;
  if (!(best_gain > threshold)) return;

  cuts.push_back((column.values[best_position] + column.values[best_position + 1]) / 2.0);
  mdl_split(column, begin, best_position + 1, cuts);
  mdl_split(column, best_position + 1, end, cuts);
}

SortedColumn sorted_column(std::span<const double> values,
                           std::span<const ActivityType> labels) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return values[a] < values[b]; });
  SortedColumn column;
  column.values.reserve(values.size());
  column.labels.reserve(values.size());
  for (int i : order) {
    column.values.push_back(values[i]);
    column.labels.push_back(static_cast<int>(labels[i]));
  }
  return column;
}

}  // namespace

std::vector<double> mdl_discretize(std::span<const double> values,
                                   std::span<const ActivityType> labels) {
  if (values.size() != labels.size()) {
    throw std::invalid_argument("mdl_discretize: values/labels size mismatch");
  }
  SortedColumn column = sorted_column(values, labels);
  std::vector<double> cuts;
  mdl_split(column, 0, static_cast<int>(column.values.size()), cuts);
  std::sort(cuts.begin(), cuts.end());
  return cuts;
}

double feature_info_gain(const LabeledDataset& dataset, int feature_index) {
  int n = static_cast<int>(dataset.size());
  std::vector<double> values(n);
  std::vector<ActivityType> labels(n);
  for (int i = 0; i < n; ++i) {
    values[i] = dataset.instances[i].features[feature_index];
    labels[i] = dataset.instances[i].label;
  }

  std::vector<double> cuts = mdl_discretize(values, labels);

  std::vector<int> class_counts(kActivityTypeCount, 0);
  for (ActivityType label : labels) class_counts[static_cast<int>(label)] += 1;
  double class_entropy = entropy_bits(class_counts, n);

  int bins = static_cast<int>(cuts.size()) + 1;
  std::vector<std::vector<int>> bin_counts(bins, std::vector<int>(kActivityTypeCount, 0));
  std::vector<int> bin_totals(bins, 0);
  for (int i = 0; i < n; ++i) {
    int bin = static_cast<int>(
        std::upper_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin());
    bin_counts[bin][static_cast<int>(labels[i])] += 1;
    bin_totals[bin] += 1;
  }
  double conditional = 0.0;
  for (int b = 0; b < bins; ++b) {
    conditional += (static_cast<double>(bin_totals[b]) / n) *
                   entropy_bits(bin_counts[b], bin_totals[b]);
  }
  return std::max(0.0, class_entropy - conditional);
}

FeatureRanking info_gain_rank(const LabeledDataset& dataset) {
  std::array<int, kActivityTypeCount> counts{};
  for (const Instance& instance : dataset.instances) {
    counts[static_cast<int>(instance.label)] += 1;
  }
  int labels_present = 0;
  for (int c : counts) labels_present += c > 0 ? 1 : 0;
  if (labels_present < 2) {
    throw std::invalid_argument("info_gain_rank: need at least two distinct labels");
  }

  FeatureRanking ranking;
  ranking.entries.reserve(features::kFeatureCount);
  for (int j = 0; j < features::kFeatureCount; ++j) {
    ranking.entries.push_back({j, feature_info_gain(dataset, j)});
  }
  std::stable_sort(ranking.entries.begin(), ranking.entries.end(),
                   [](const RankedFeature& a, const RankedFeature& b) {
                     return a.info_gain_bits > b.info_gain_bits;
                   });
  return ranking;
}

BlendSearchResult grid_search_blend(const LabeledDataset& dataset,
                                    std::span<const double> candidates, int folds,
                                    std::uint64_t seed) {
  if (candidates.empty()) {
    throw std::invalid_argument("grid_search_blend: no candidates");
  }
  BlendSearchResult result;
  bool have_best = false;
  double best_accuracy = -1.0;
  for (double blend : candidates) {
    require_blend(blend);
    ClassifierFactory factory = [blend](const LabeledDataset& train) {
      auto model = std::make_shared<KStarModel>(kstar_train(train, blend));
      return TrainedClassifier([model](std::span<const double> query) {
        return kstar_predict(*model, query).label;
      });
    };
    double accuracy = cross_validate(dataset, factory, folds, seed);
    result.accuracy_by_blend.emplace_back(blend, accuracy);
    if (!have_best || accuracy > best_accuracy ||
        (accuracy == best_accuracy && blend < result.best_blend)) {
      have_best = true;
      best_accuracy = accuracy;
      result.best_blend = blend;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Model serialization
// ---------------------------------------------------------------------------

std::string write_model_json(const KStarModel& model) {
  nlohmann::json document;
  document["schema_version"] = 1;
  document["blend"] = model.blend;
  nlohmann::json instances = nlohmann::json::array();
  for (const Instance& instance : model.training.instances) {
    nlohmann::json row;
    row["features"] = instance.features;
    row["label"] = std::string(to_string(instance.label));
    instances.push_back(std::move(row));
  }
  document["instances"] = std::move(instances);
  return document.dump(2) + "\n";
}

KStarModel read_model_json(const std::string& text) {
  nlohmann::json document;
  try {
    document = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& error) {
    throw std::runtime_error(std::string("model file is not valid JSON: ") +
                             error.what());
  }
  if (!document.is_object() || !document.contains("blend") ||
      !document.contains("instances") || !document["instances"].is_array()) {
    throw std::runtime_error("model file: expected {blend, instances}");
  }
  LabeledDataset dataset;
  for (const auto& row : document["instances"]) {
    Instance instance;
    const auto& features_json = row.at("features");
    if (!features_json.is_array() || features_json.size() != features::kFeatureCount) {
      throw std::runtime_error("model file: each instance needs 15 features");
    }
    for (int j = 0; j < features::kFeatureCount; ++j) {
      instance.features[j] = features_json[j].get<double>();
    }
    auto label = activity_type_from_string(row.at("label").get<std::string>());
    if (!label) {
      throw std::runtime_error("model file: unknown label \"" +
                               row.at("label").get<std::string>() + "\"");
    }
    instance.label = *label;
    dataset.instances.push_back(instance);
  }
  return kstar_train(std::move(dataset), document["blend"].get<double>());
}

void write_model_file(const KStarModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << write_model_json(model);
}

KStarModel read_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return read_model_json(buffer.str());
}

}  // namespace appcheck::learn
