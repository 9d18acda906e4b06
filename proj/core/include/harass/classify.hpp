#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "harass/matrix.hpp"

namespace harass {

enum class LearnerKind { NbMultinomial, NbGaussian, Knn, LinearSvm, Gbm };
enum class KnnMetric { Euclidean, Cosine };

std::string_view to_string(LearnerKind kind);
LearnerKind parse_learner_kind(std::string_view text);
std::string_view to_string(KnnMetric metric);
KnnMetric parse_knn_metric(std::string_view text);

/// Defaults follow the published GBM settings: learning rate 0.1, 100
/// trees, subsample 1.0, depth 3, min split 2, min leaf 1, Friedman MSE.
struct GbmConfig {
  double learning_rate = 0.1;
  std::size_t n_trees = 100;
  double subsample = 1.0;
  std::size_t max_depth = 3;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LearnerConfig {
  LearnerKind kind = LearnerKind::Gbm;
  double nb_alpha = 1.0;
  std::size_t knn_k = 5;
  KnnMetric knn_metric = KnnMetric::Euclidean;
  double svm_lambda = 1e-4;
  std::size_t svm_epochs = 20;
  GbmConfig gbm;
  std::uint64_t seed = 0;  // SVM sampling order and GBM row subsampling

  nlohmann::json to_json() const;
  static LearnerConfig from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Regression trees

struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] <= threshold goes left
    double value = 0.0;      // leaf output
    std::size_t left = 0;
    std::size_t right = 0;
    double improvement = 0.0;  // Friedman MSE improvement of the split
  };

  std::vector<Node> nodes;

  double predict(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t leaf_index(std::span<const double> x) const;
};

/// n_l * n_r / (n_l + n_r) * (mean_l - mean_r)^2
double friedman_improvement(double sum_left, std::size_t n_left, double sum_right, std::size_t n_right);

struct SplitChoice {
  std::size_t feature = 0;
  double threshold = 0.0;
  double improvement = 0.0;
};

/// Exact search over midpoints between consecutive distinct values of each
/// feature among `rows`. Ties (gains within a relative 1e-12) keep the
/// lowest feature, then the lowest threshold. Returns nullopt for a pure node (target variance at or below
/// machine epsilon), or when no split improves or satisfies min_samples_leaf.
std::optional<SplitChoice> best_split(const Matrix& x, std::span<const double> target,
                                      std::span<const std::size_t> rows, std::size_t min_samples_leaf);

/// Leaf value from the rows that reach the leaf.
using LeafValueFn = std::function<double(std::span<const std::size_t> rows)>;

RegressionTree fit_regression_tree(const Matrix& x, std::span<const double> target,
                                   std::span<const std::size_t> rows, const GbmConfig& config,
                                   const LeafValueFn& leaf_value);

// ---------------------------------------------------------------------------
// Models

struct NbMultinomialParams {
  Matrix log_likelihood;  // classes x features
  std::vector<double> log_prior;
};

struct NbGaussianParams {
  Matrix mean;
  Matrix variance;
  std::vector<double> log_prior;
};

struct KnnParams {
  Matrix points;
  std::vector<int> labels;
  std::size_t k = 5;
  KnnMetric metric = KnnMetric::Euclidean;
};

struct SvmParams {
  Matrix weights;  // one row (binary, positive class) or one per class
  std::vector<double> bias;
};

struct GbmParams {
  std::vector<double> initial_scores;                // 1 (binary) or K
  std::vector<std::vector<RegressionTree>> stages;   // stages x (1 or K)
  double learning_rate = 0.1;
  std::vector<double> staged_loss;  // training loss after init and each stage
};

using ModelParams = std::variant<NbMultinomialParams, NbGaussianParams, KnnParams, SvmParams, GbmParams>;

struct ModelMetadata {
  std::uint64_t seed = 0;
  std::string corpus_hash;
  std::string feature_spec;
};

struct TrainedModel {
  LearnerKind kind = LearnerKind::Gbm;
  std::vector<std::string> label_space;
  std::size_t feature_width = 0;
  ModelParams params;
  ModelMetadata metadata;
  LearnerConfig config;
  /// Fitted feature pipeline for re-vectorizing raw text; may be null.
  nlohmann::json pipeline;
};

struct Predictions {
  std::vector<int> labels;
  Matrix scores;  // rows x classes
};

TrainedModel train_nb(const Matrix& x, std::span<const int> y, std::vector<std::string> label_space,
                      LearnerKind variant = LearnerKind::NbMultinomial, double alpha = 1.0);
TrainedModel train_knn(const Matrix& x, std::span<const int> y, std::vector<std::string> label_space,
                       std::size_t k = 5, KnnMetric metric = KnnMetric::Euclidean);
TrainedModel train_svm(const Matrix& x, std::span<const int> y, std::vector<std::string> label_space,
                       double lambda = 1e-4, std::size_t epochs = 20, std::uint64_t seed = 0);
/// Newton leaf values; a stage that would raise the training loss has its
/// leaves halved until it no longer does, so staged_loss never increases.
TrainedModel train_gbm(const Matrix& x, std::span<const int> y, std::vector<std::string> label_space,
                       const GbmConfig& config = {});

TrainedModel train_model(const LearnerConfig& config, const Matrix& x, std::span<const int> y,
                         std::vector<std::string> label_space);

/// Argmax of per-class scores (lowest class index on ties). Scores are
/// probabilities for NB and GBM, vote fractions for KNN and signed margins
/// for the SVM.
Predictions predict(const TrainedModel& model, const Matrix& x);

/// Regularized hinge objective used by the SVM, with y in {-1, +1}:
///   lambda/2 (|w|^2 + b^2) + mean_i max(0, 1 - y_i (w.x_i + b))
double svm_objective(std::span<const double> w, double b, const Matrix& x, std::span<const int> y_pm,
                     double lambda);
/// Sub-gradient of svm_objective; grad has size w.size() + 1 (bias last).
void svm_subgradient(std::span<const double> w, double b, const Matrix& x, std::span<const int> y_pm,
                     double lambda, std::span<double> grad);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& j);
void save_model(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_model(const std::filesystem::path& path);

}  // namespace harass
