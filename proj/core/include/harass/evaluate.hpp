#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "harass/classify.hpp"
#include "harass/corpus.hpp"
#include "harass/matrix.hpp"
#include "harass/vectorize.hpp"

namespace harass {

inline constexpr std::string_view kNonHarassingClass = "nonharassing";
inline constexpr std::string_view kHarassingClass = "harassing";

/// Rows are true classes, columns predicted classes.
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> label_space);

  std::size_t classes() const noexcept { return labels_.size(); }
  const std::vector<std::string>& label_space() const noexcept { return labels_; }
  std::uint64_t at(std::size_t truth, std::size_t predicted) const { return counts_[truth * labels_.size() + predicted]; }
  void add(std::size_t truth, std::size_t predicted, std::uint64_t n = 1);
  std::uint64_t total() const;
  ConfusionMatrix& operator+=(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::vector<std::string> labels_;
  std::vector<std::uint64_t> counts_;
};

/// Throws LengthMismatch / UnknownLabel.
ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::vector<std::string> label_space);

struct ClassMetrics {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
  std::uint64_t support = 0;
};

struct AveragedMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f_score = 0.0;
};

/// Binary reports hold one per-class row (the positive class) plus
/// accuracy and specificity. Multi-class reports hold every class plus
/// micro and macro averages. Undefined ratios are reported as 0 and noted
/// in warnings.
struct MetricsReport {
  std::vector<ClassMetrics> per_class;
  std::optional<double> accuracy;
  std::optional<double> specificity;
  std::optional<AveragedMetrics> micro;
  std::optional<AveragedMetrics> macro;
  std::vector<std::string> warnings;

  bool is_binary() const { return !micro.has_value(); }
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

/// Throws NotBinary unless cm is 2x2.
MetricsReport binary_metrics(const ConfusionMatrix& cm, std::size_t positive = 1);
MetricsReport multiclass_metrics(const ConfusionMatrix& cm);
/// binary_metrics for 2x2 matrices, multiclass_metrics otherwise.
MetricsReport metrics_for(const ConfusionMatrix& cm, std::size_t positive = 1);

// ---------------------------------------------------------------------------
// Cross-validation

struct FoldResult {
  std::size_t repeat = 0;
  std::size_t fold = 0;
  ConfusionMatrix confusion;
  MetricsReport metrics;
};

struct CvResult {
  MetricsReport mean;    // unweighted mean of per-fold metrics (or pooled)
  MetricsReport stddev;  // population std of per-fold metrics
  std::vector<FoldResult> folds;  // ordered by (repeat, fold)
  bool pooled = false;
};

struct CvOptions {
  bool pooled = false;        // aggregate from the summed confusion matrix
  std::size_t threads = 1;    // concurrent fold evaluations
  std::size_t positive = 1;   // positive class for binary reports
};

/// Builds train and test matrices for one fold from corpus row indices.
using Featurizer = std::function<std::pair<Matrix, Matrix>(std::span<const std::size_t> train,
                                                           std::span<const std::size_t> test)>;
/// Trains on (x, y) and returns predicted class indices for the test rows.
/// The seed is derived per fold from the run seed.
using FoldLearner =
    std::function<std::vector<int>(const Matrix& x_train, std::span<const int> y_train, const Matrix& x_test,
                                   std::uint64_t seed)>;

CvResult cross_validate(std::span<const int> labels, const std::vector<std::string>& label_space,
                        const FoldPlan& plan, const Featurizer& featurize, const FoldLearner& learn,
                        CvOptions options = {});

/// Averages per-fold reports field by field. Reports must share a shape.
std::pair<MetricsReport, MetricsReport> aggregate_reports(std::span<const MetricsReport> reports);

/// Called once per fold with the pipeline fitted on that fold's training
/// rows.
using FoldObserver = std::function<void(std::size_t repeat, std::size_t fold, const FeaturePipeline& pipeline,
                                        std::span<const std::size_t> train)>;

/// Full text pipeline per fold: FeaturePipeline fitted on the training
/// rows only (any TF-IDF model in resources is ignored), then the learner.
CvResult cross_validate(const Corpus& corpus, std::span<const int> labels,
                        const std::vector<std::string>& label_space, const FeatureSpec& spec,
                        const FeatureResources& resources, const LearnerConfig& learner, const FoldPlan& plan,
                        PipelineOptions pipeline_options = {}, CvOptions options = {},
                        const FoldObserver& observer = {});

// ---------------------------------------------------------------------------
// Task labels

/// {"nonharassing", "harassing"}
std::vector<std::string> binary_label_space();
/// The five type names followed by "nonharassing".
std::vector<std::string> multiclass_label_space();

/// Maps each tweet to an index of label_space: binary spaces use the tweet
/// label, otherwise harassing tweets map to their type name and
/// non-harassing ones to "nonharassing". Throws UnknownLabel.
std::vector<int> task_labels(const Corpus& corpus, const std::vector<std::string>& label_space);

// ---------------------------------------------------------------------------
// Transfer evaluation

struct ProportionRow {
  std::string label;
  double percent = 0.0;
};

struct TransferReport {
  ConfusionMatrix confusion;
  MetricsReport metrics;
  std::vector<ProportionRow> proportions;  // harassing classes only; sums to 100
  std::vector<int> predicted;
};

/// Vectorizes the external corpus with the model's stored pipeline (no
/// refitting) and scores it. Throws DimensionMismatch / UnknownLabel.
TransferReport transfer_evaluate(const TrainedModel& model, const Corpus& external,
                                 const FeatureResources& resources);

// ---------------------------------------------------------------------------
// Reports

enum class ReportFormat { Csv, Markdown };

/// Columns Precision, Recall, F-Score, Accuracy, Specificity. Absent
/// values are left blank. CSV keeps full precision, markdown rounds to two
/// decimals. Multi-class reports append micro and macro rows.
std::string emit_report(const MetricsReport& report, ReportFormat format);
std::string emit_transfer_report(const TransferReport& report, ReportFormat format);

}  // namespace harass
