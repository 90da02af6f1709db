#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "appcheck/dataset.hpp"

namespace appcheck::learn {

/// Lazy instance-based classifier. The blend parameter (percent, 0..100)
/// interpolates the kernel's per-attribute influence between the nearest
/// training instances (0) and the whole dataset (100).
struct KStarModel {
  LabeledDataset training;
  double blend = 20.0;
};

/// Stores the instances verbatim; there is no fitting step.
/// Throws std::invalid_argument on an empty dataset or blend outside [0,100].
KStarModel kstar_train(LabeledDataset dataset, double blend = 20.0);

struct Prediction {
  ActivityType label = ActivityType::Splash;
  /// Relative per-class evidence, normalized to sum to 1. Indexed by
  /// ActivityType value.
  std::array<double, kActivityTypeCount> class_scores{};
};

/// Classifies a 15-feature query:
///   1. per attribute j, distances d_i = |x_ij - q_j| over the N training
///      instances are weighted with w_i(s) = exp(-d_i / s);
///   2. the effective instance count m(s) = (sum w)^2 / (sum w^2) runs from
///      n0 (instances at minimal distance) to N as s grows;
///   3. s_j is solved so that m(s_j) = n0 + blend/100 * (N - n0);
///   4. the combined weight of instance i is the product of its per-attribute
///      weights; class scores sum combined weights, ties break by the
///      ActivityType declaration order.
/// Throws std::invalid_argument on non-finite queries.
Prediction kstar_predict(const KStarModel& model, std::span<const double> query);

/// The per-attribute kernel scales step 3 solves for the given query.
/// Attributes whose training distances are all equal get scale 0 (their
/// weights are fixed at 1). Exposed for oracle-style verification.
std::array<double, features::kFeatureCount> kstar_attribute_scales(
    const KStarModel& model, std::span<const double> query);

/// Effective instance count (sum w)^2 / (sum w^2) for distances d at scale s.
double effective_count(std::span<const double> distances, double scale);

/// Solves effective_count(distances, s) = target by bisection, to absolute
/// tolerance tol on the count. Requires at least two distinct distances and
/// n0 <= target <= N.
double solve_kernel_scale(std::span<const double> distances, double target,
                          double tol = 1e-6);

/// Majority vote among the k nearest by Euclidean distance. Distance ties
/// break by instance order, vote ties by ActivityType order.
/// Throws std::invalid_argument when k < 1 or k > N.
ActivityType knn_predict(const LabeledDataset& dataset,
                         std::span<const double> query, int k);

/// Most frequent label; ties break by ActivityType order.
ActivityType majority_predict(const LabeledDataset& dataset);

/// A trained classifier maps a feature vector to a label.
using TrainedClassifier = std::function<ActivityType(std::span<const double>)>;
/// A classifier factory trains on a fold's training split.
using ClassifierFactory = std::function<TrainedClassifier(const LabeledDataset&)>;

/// Stratified fold assignment: instance indices are grouped per class,
/// shuffled with the seeded generator, and dealt round-robin to folds.
/// Deterministic given the seed. Throws when folds < 2 or folds > N.
std::vector<std::vector<int>> stratified_folds(const LabeledDataset& dataset,
                                               int folds, std::uint64_t seed);

/// K-fold cross-validated accuracy in [0, 1].
double cross_validate(const LabeledDataset& dataset, const ClassifierFactory& factory,
                      int folds, std::uint64_t seed);

struct RankedFeature {
  int feature_index = 0;
  double info_gain_bits = 0.0;
};

/// All 15 features sorted by information gain, non-increasing; ties break by
/// feature index.
struct FeatureRanking {
  std::vector<RankedFeature> entries;
};

/// Supervised discretization of one numeric column: recursive binary splits
/// accepted under the MDL criterion
///   gain > [log2(N-1) + log2(3^k - 2) - k*E(S) + k1*E(S1) + k2*E(S2)] / N
/// where E is class entropy in bits and k counts classes present in a set.
/// Returns the accepted cut points, ascending.
std::vector<double> mdl_discretize(std::span<const double> values,
                                   std::span<const ActivityType> labels);

/// Class entropy minus conditional class entropy over the MDL bins, in bits.
double feature_info_gain(const LabeledDataset& dataset, int feature_index);

/// Throws std::invalid_argument when the dataset has fewer than two labels.
FeatureRanking info_gain_rank(const LabeledDataset& dataset);

struct BlendSearchResult {
  double best_blend = 0.0;
  /// (blend, cross-validated accuracy) per candidate, in candidate order.
  std::vector<std::pair<double, double>> accuracy_by_blend;
};

/// Cross-validates K* for each candidate blend and returns the best;
/// accuracy ties go to the smaller blend.
BlendSearchResult grid_search_blend(const LabeledDataset& dataset,
                                    std::span<const double> candidates, int folds,
                                    std::uint64_t seed);

// Model (de)serialization, JSON. See docs/formats.md.
std::string write_model_json(const KStarModel& model);
KStarModel read_model_json(const std::string& text);
void write_model_file(const KStarModel& model, const std::string& path);
KStarModel read_model_file(const std::string& path);

}  // namespace appcheck::learn
