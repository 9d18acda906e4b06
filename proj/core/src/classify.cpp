#include "harass/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "harass/error.hpp"
#include "harass/io.hpp"
#include "harass/random.hpp"

namespace harass {

std::string_view to_string(LearnerKind kind) {
  switch (kind) {
    case LearnerKind::NbMultinomial: return "nb_multinomial";
    case LearnerKind::NbGaussian: return "nb_gaussian";
    case LearnerKind::Knn: return "knn";
    case LearnerKind::LinearSvm: return "linear_svm";
    case LearnerKind::Gbm: return "gbm";
  }
  return "gbm";
}

LearnerKind parse_learner_kind(std::string_view text) {
  for (auto k : {LearnerKind::NbMultinomial, LearnerKind::NbGaussian, LearnerKind::Knn, LearnerKind::LinearSvm,
                 LearnerKind::Gbm}) {
    if (text == to_string(k)) return k;
  }
  if (text == "nb") return LearnerKind::NbMultinomial;
  if (text == "svm") return LearnerKind::LinearSvm;
  fail(ErrorCode::Config, "unknown learner '" + std::string(text) + "'");
}

std::string_view to_string(KnnMetric metric) { return metric == KnnMetric::Euclidean ? "euclidean" : "cosine"; }

KnnMetric parse_knn_metric(std::string_view text) {
  if (text == "euclidean") return KnnMetric::Euclidean;
  if (text == "cosine") return KnnMetric::Cosine;
  fail(ErrorCode::Config, "unknown KNN metric '" + std::string(text) + "'");
}

void GbmConfig::validate() const {
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) fail(ErrorCode::Config, "learning_rate must be in (0, 1]");
  if (!(subsample > 0.0 && subsample <= 1.0)) fail(ErrorCode::Config, "subsample must be in (0, 1]");
  if (max_depth < 1) fail(ErrorCode::Config, "max_depth must be >= 1");
  if (n_trees < 1) fail(ErrorCode::Config, "n_trees must be >= 1");
  if (min_samples_split < 2) fail(ErrorCode::Config, "min_samples_split must be >= 2");
  if (min_samples_leaf < 1) fail(ErrorCode::Config, "min_samples_leaf must be >= 1");
}

nlohmann::json LearnerConfig::to_json() const {
  return {{"kind", to_string(kind)},
          {"nb_alpha", nb_alpha},
          {"knn_k", knn_k},
          {"knn_metric", to_string(knn_metric)},
          {"svm_lambda", svm_lambda},
          {"svm_epochs", svm_epochs},
          {"gbm",
           {{"learning_rate", gbm.learning_rate},
            {"n_trees", gbm.n_trees},
            {"subsample", gbm.subsample},
            {"max_depth", gbm.max_depth},
            {"min_samples_split", gbm.min_samples_split},
            {"min_samples_leaf", gbm.min_samples_leaf},
            {"split_criterion", "friedman_mse"},
            {"seed", gbm.seed}}},
          {"seed", seed}};
}

LearnerConfig LearnerConfig::from_json(const nlohmann::json& j) {
  LearnerConfig c;
  c.kind = parse_learner_kind(j.at("kind").get<std::string>());
  c.nb_alpha = j.value("nb_alpha", c.nb_alpha);
  c.knn_k = j.value("knn_k", c.knn_k);
  c.knn_metric = parse_knn_metric(j.value("knn_metric", std::string("euclidean")));
  c.svm_lambda = j.value("svm_lambda", c.svm_lambda);
  c.svm_epochs = j.value("svm_epochs", c.svm_epochs);
  c.seed = j.value("seed", c.seed);
  if (j.contains("gbm")) {
    const auto& g = j.at("gbm");
    c.gbm.learning_rate = g.value("learning_rate", c.gbm.learning_rate);
    c.gbm.n_trees = g.value("n_trees", c.gbm.n_trees);
    c.gbm.subsample = g.value("subsample", c.gbm.subsample);
    c.gbm.max_depth = g.value("max_depth", c.gbm.max_depth);
    c.gbm.min_samples_split = g.value("min_samples_split", c.gbm.min_samples_split);
    c.gbm.min_samples_leaf = g.value("min_samples_leaf", c.gbm.min_samples_leaf);
    c.gbm.seed = g.value("seed", c.gbm.seed);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Regression trees

double RegressionTree::predict(std::span<const double> x) const { return nodes[leaf_index(x)].value; }

std::size_t RegressionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
  }
  return i;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    deepest = std::max(deepest, d[i]);
    if (nodes[i].feature >= 0) {
      d[nodes[i].left] = d[i] + 1;
      d[nodes[i].right] = d[i] + 1;
    }
  }
  return deepest;
}

double friedman_improvement(double sum_left, std::size_t n_left, double sum_right, std::size_t n_right) {
  const double nl = static_cast<double>(n_left);
  const double nr = static_cast<double>(n_right);
  const double diff = sum_left / nl - sum_right / nr;
  return nl * nr / (nl + nr) * diff * diff;
}

namespace {

using SortedOrder = std::vector<std::vector<std::uint32_t>>;

// Per-feature row order by ascending value (row index breaks ties).
SortedOrder presort(const Matrix& x, std::span<const std::size_t> rows) {
  SortedOrder order(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& o = order[f];
    o.assign(rows.begin(), rows.end());
    std::sort(o.begin(), o.end(), [&](std::uint32_t a, std::uint32_t b) {
      const double va = x(a, f), vb = x(b, f);
      return va < vb || (va == vb && a < b);
    });
  }
  return order;
}

double midpoint(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  // Adjacent doubles: fall back to the lower value so that lo goes left.
  return (mid >= hi) ? lo : mid;
}

constexpr double kTieTolerance = 1e-12;

// Mean squared deviation of the node targets. A node at or below machine
// epsilon is pure, and any split of it would only chase rounding noise.
bool is_pure(std::span<const double> target, std::span<const std::size_t> rows, double sum) {
  const double mean = sum / static_cast<double>(rows.size());
  double ss = 0.0;
  for (std::size_t r : rows) ss += (target[r] - mean) * (target[r] - mean);
  return ss / static_cast<double>(rows.size()) <= std::numeric_limits<double>::epsilon();
}

std::optional<SplitChoice> search_split(const Matrix& x, std::span<const double> target, const SortedOrder& order,
                                        const std::vector<char>& in_node, std::size_t n_node, double sum_node,
                                        std::size_t min_leaf) {
  std::optional<SplitChoice> best;
  if (n_node < 2 * min_leaf) return best;
  for (std::size_t f = 0; f < order.size(); ++f) {
    std::size_t nl = 0;
    double sl = 0.0;
    double prev = 0.0;
    for (std::uint32_t i : order[f]) {
      if (!in_node[i]) continue;
      const double v = x(i, f);
      if (nl > 0 && v > prev && nl >= min_leaf && n_node - nl >= min_leaf) {
        const double gain = friedman_improvement(sl, nl, sum_node - sl, n_node - nl);
        // Gains equal up to rounding count as ties, so the earlier split wins.
        if (gain > 0.0 && (!best || gain > best->improvement * (1.0 + kTieTolerance))) {
          best = SplitChoice{f, midpoint(prev, v), gain};
        }
      }
      ++nl;
      sl += target[i];
      prev = v;
      if (n_node - nl < min_leaf) break;
    }
  }
  return best;
}

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, std::span<const double> target, const SortedOrder& order, const GbmConfig& config,
              const LeafValueFn& leaf_value)
      : x_(x), target_(target), order_(order), config_(config), leaf_value_(leaf_value), in_node_(x.rows(), 0) {}

  RegressionTree build(std::span<const std::size_t> rows) {
    tree_.nodes.clear();
    grow(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
    return std::move(tree_);
  }

 private:
  std::size_t grow(std::vector<std::size_t> rows, std::size_t depth) {
    const std::size_t id = tree_.nodes.size();
    tree_.nodes.emplace_back();
    std::optional<SplitChoice> split;
    if (depth < config_.max_depth && rows.size() >= config_.min_samples_split) {
      double sum = 0.0;
      for (std::size_t r : rows) {
        in_node_[r] = 1;
        sum += target_[r];
      }
      if (!is_pure(target_, rows, sum)) {
        split = search_split(x_, target_, order_, in_node_, rows.size(), sum, config_.min_samples_leaf);
      }
      for (std::size_t r : rows) in_node_[r] = 0;
    }
    if (!split) {
      tree_.nodes[id].value = leaf_value_(rows);
      return id;
    }
    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) (x_(r, split->feature) <= split->threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    const std::size_t l = grow(std::move(left), depth + 1);
    const std::size_t rr = grow(std::move(right), depth + 1);
    auto& node = tree_.nodes[id];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.improvement = split->improvement;
    node.left = l;
    node.right = rr;
    return id;
  }

  const Matrix& x_;
  std::span<const double> target_;
  const SortedOrder& order_;
  const GbmConfig& config_;
  const LeafValueFn& leaf_value_;
  std::vector<char> in_node_;
  RegressionTree tree_;
};

}  // namespace

std::optional<SplitChoice> best_split(const Matrix& x, std::span<const double> target,
                                      std::span<const std::size_t> rows, std::size_t min_samples_leaf) {
  const SortedOrder order = presort(x, rows);
  std::vector<char> in_node(x.rows(), 0);
  double sum = 0.0;
  for (std::size_t r : rows) {
    in_node[r] = 1;
    sum += target[r];
  }
  if (rows.empty() || is_pure(target, rows, sum)) return std::nullopt;
  return search_split(x, target, order, in_node, rows.size(), sum, min_samples_leaf);
}

RegressionTree fit_regression_tree(const Matrix& x, std::span<const double> target,
                                   std::span<const std::size_t> rows, const GbmConfig& config,
                                   const LeafValueFn& leaf_value) {
  const SortedOrder order = presort(x, rows);
  return TreeBuilder(x, target, order, config, leaf_value).build(rows);
}

// ---------------------------------------------------------------------------
// Shared helpers

namespace {

std::size_t check_training_input(const Matrix& x, std::span<const int> y, const std::vector<std::string>& labels) {
  if (x.rows() != y.size()) fail(ErrorCode::LengthMismatch, "feature rows and labels differ in length");
  if (x.rows() == 0) fail(ErrorCode::EmptyCorpus, "no training rows");
  if (labels.size() < 2) fail(ErrorCode::SingleClass, "label space needs at least two classes");
  std::vector<char> seen(labels.size(), 0);
  for (int c : y) {
    if (c < 0 || static_cast<std::size_t>(c) >= labels.size()) fail(ErrorCode::UnknownLabel, "class index out of range");
    seen[static_cast<std::size_t>(c)] = 1;
  }
  if (std::count(seen.begin(), seen.end(), 1) < 2) fail(ErrorCode::SingleClass, "training labels hold one class");
  for (double v : x.data()) {
    if (!std::isfinite(v)) fail(ErrorCode::NumericFailure, "non-finite training feature");
  }
  return labels.size();
}

std::vector<double> class_log_priors(std::span<const int> y, std::size_t classes) {
  std::vector<double> counts(classes, 0.0);
  for (int c : y) counts[static_cast<std::size_t>(c)] += 1.0;
  std::vector<double> lp(classes);
  for (std::size_t c = 0; c < classes; ++c) {
    lp[c] = counts[c] > 0 ? std::log(counts[c] / static_cast<double>(y.size()))
                          : -std::numeric_limits<double>::infinity();
  }
  return lp;
}

void softmax_inplace(std::span<double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double& x : v) {
    x = std::exp(x - m);
    s += x;
  }
  for (double& x : v) x /= s;
}

double sigmoid(double f) { return f >= 0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f)); }

int argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return static_cast<int>(best);
}

}  // namespace

// ---------------------------------------------------------------------------
// Naive Bayes

TrainedModel train_nb(const Matrix& x, std::span<const int> y, std::vector<std::string> label_space,
                      LearnerKind variant, double alpha) {
  const std::size_t classes = check_training_input(x, y, label_space);
  const std::size_t d = x.cols();
  TrainedModel model;
  model.kind = variant;
  model.feature_width = d;
  model.config.kind = variant;
  model.config.nb_alpha = alpha;

  if (variant == LearnerKind::NbMultinomial) {
    if (!(alpha > 0.0)) fail(ErrorCode::Config, "multinomial NB needs alpha > 0");
    for (double v : x.data()) {
      if (v < 0.0) fail(ErrorCode::NegativeFeature, "multinomial NB needs non-negative features");
    }
    Matrix counts(classes, d, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      auto dst = counts.row(static_cast<std::size_t>(y[r]));
      const auto src = x.row(r);
      for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
    }
    NbMultinomialParams p;
    p.log_prior = class_log_priors(y, classes);
    p.log_likelihood = Matrix(classes, d);
    for (std::size_t c = 0; c < classes; ++c) {
      const auto row = counts.row(c);
      const double total = std::accumulate(row.begin(), row.end(), 0.0) + alpha * static_cast<double>(d);
      for (std::size_t j = 0; j < d; ++j) p.log_likelihood(c, j) = std::log((row[j] + alpha) / total);
    }
    model.params = std::move(p);
  } else if (variant == LearnerKind::NbGaussian) {
    NbGaussianParams p;
    p.log_prior = class_log_priors(y, classes);
    p.mean = Matrix(classes, d);
    p.variance = Matrix(classes, d);
    std::vector<double> n(classes, 0.0);
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto c = static_cast<std::size_t>(y[r]);
      n[c] += 1.0;
      for (std::size_t j = 0; j < d; ++j) p.mean(c, j) += x(r, j);
    }
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t j = 0; j < d; ++j) p.mean(c, j) = n[c] > 0 ? p.mean(c, j) / n[c] : 0.0;
    }
    for (std::size_t r = 0; r < x.rows(); ++r) {
      const auto c = static_cast<std::size_t>(y[r]);
      for (std::size_t j = 0; j < d; ++j) p.variance(c, j) += (x(r, j) - p.mean(c, j)) * (x(r, j) - p.mean(c, j));
    }
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t j = 0; j < d; ++j) {
        p.variance(c, j) = std::max(n[c] > 0 ? p.variance(c, j) / n[c] : 0.0, 1e-9);
      }
    }
    model.params = std::move(p);
  } else {
    fail(ErrorCode::InvalidArgument, "train_nb called with a non-NB learner kind");
  }
  model.label_space = std::move(label_space);
  return model;
}

// ---------------------------------------------------------------------------
// KNN

TrainedModel train_knn(const Matrix& x, std::span<const int> y, std::vector<std::string> label_space, std::size_t k,
                       KnnMetric metric) {
  check_training_input(x, y, label_space);
  if (k < 1) fail(ErrorCode::Config, "k must be >= 1");
  if (k > x.rows()) {
    fail(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds " + std::to_string(x.rows()) + " training rows");
  }
  TrainedModel model;
  model.kind = LearnerKind::Knn;
  model.feature_width = x.cols();
  model.config.kind = LearnerKind::Knn;
  model.config.knn_k = k;
  model.config.knn_metric = metric;
  model.params = KnnParams{x, std::vector<int>(y.begin(), y.end()), k, metric};
  model.label_space = std::move(label_space);
  return model;
}

namespace {

double knn_distance(std::span<const double> a, std::span<const double> b, KnnMetric metric) {
  if (metric == KnnMetric::Euclidean) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(s);
  }
  const double na = std::sqrt(dot(a, a)), nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) return 1.0;
  return 1.0 - dot(a, b) / (na * nb);
}

}  // namespace

// ---------------------------------------------------------------------------
// Linear SVM (Pegasos with the bias as a regularized extra coordinate)

double svm_objective(std::span<const double> w, double b, const Matrix& x, std::span<const int> y_pm,
                     double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    hinge += std::max(0.0, 1.0 - y_pm[i] * (dot(w, x.row(i)) + b));
  }
  return 0.5 * lambda * (dot(w, w) + b * b) + hinge / static_cast<double>(x.rows());
}

void svm_subgradient(std::span<const double> w, double b, const Matrix& x, std::span<const int> y_pm,
                     double lambda, std::span<double> grad) {
  const std::size_t d = w.size();
  for (std::size_t j = 0; j < d; ++j) grad[j] = lambda * w[j];
  grad[d] = lambda * b;
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto xi = x.row(i);
    if (y_pm[i] * (dot(w, xi) + b) < 1.0) {
      for (std::size_t j = 0; j < d; ++j) grad[j] -= inv_n * y_pm[i] * xi[j];
      grad[d] -= inv_n * y_pm[i];
    }
  }
}

namespace {

// Returns weights with the bias appended.
std::vector<double> pegasos(const Matrix& x, std::span<const int> y_pm, double lambda, std::size_t epochs, Rng& rng) {
  const std::size_t d = x.cols();
  std::vector<double> w(d + 1, 0.0);
  std::vector<std::size_t> order(x.rows());
  std::iota(order.begin(), order.end(), 0);
  const double radius = 1.0 / std::sqrt(lambda);
  std::uint64_t t = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    for (std::size_t i : order) {
      ++t;
      const double eta = 1.0 / (lambda * static_cast<double>(t));
      const auto xi = x.row(i);
      const double margin = y_pm[i] * (dot(std::span<const double>(w).first(d), xi) + w[d]);
      const double shrink = 1.0 - eta * lambda;
      for (double& v : w) v *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * y_pm[i] * xi[j];
        w[d] += eta * y_pm[i];
      }
      const double norm = std::sqrt(dot(w, w));
      if (norm > radius) {
        for (double& v : w) v *= radius / norm;
      }
    }
  }
  return w;
}

}  // namespace

TrainedModel train_svm(const Matrix& x, std::span<const int> y, std::vector<std::string> label_space, double lambda,
                       std::size_t epochs, std::uint64_t seed) {
  const std::size_t classes = check_training_input(x, y, label_space);
  if (!(lambda > 0.0)) fail(ErrorCode::Config, "svm lambda must be positive");
  if (epochs < 1) fail(ErrorCode::Config, "svm epochs must be >= 1");
  // Binary: one separator for class 1. Multi-class: one-vs-rest, each
  // machine visiting rows in the same seeded order.
  const std::size_t machines = classes == 2 ? 1 : classes;
  SvmParams p;
  p.weights = Matrix(machines, x.cols());
  p.bias.assign(machines, 0.0);
  std::vector<int> y_pm(y.size());
  for (std::size_t m = 0; m < machines; ++m) {
    const int positive = classes == 2 ? 1 : static_cast<int>(m);
    for (std::size_t i = 0; i < y.size(); ++i) y_pm[i] = y[i] == positive ? 1 : -1;
    Rng rng(seed);
    const auto w = pegasos(x, y_pm, lambda, epochs, rng);
    std::copy(w.begin(), w.end() - 1, p.weights.row(m).begin());
    p.bias[m] = w.back();
  }
  TrainedModel model;
  model.kind = LearnerKind::LinearSvm;
  model.feature_width = x.cols();
  model.config.kind = LearnerKind::LinearSvm;
  model.config.svm_lambda = lambda;
  model.config.svm_epochs = epochs;
  model.config.seed = seed;
  model.metadata.seed = seed;
  model.params = std::move(p);
  model.label_space = std::move(label_space);
  return model;
}

// ---------------------------------------------------------------------------
// Gradient boosting

namespace {

double logistic_loss(std::span<const double> f, std::span<const int> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    // log(1 + exp(-z)) with z = +f for positives, -f for negatives.
    const double z = y[i] == 1 ? f[i] : -f[i];
    s += z >= 0 ? std::log1p(std::exp(-z)) : -z + std::log1p(std::exp(z));
  }
  return s / static_cast<double>(f.size());
}

double softmax_loss(const Matrix& f, std::span<const int> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < f.rows(); ++i) {
    const auto row = f.row(i);
    const double m = *std::max_element(row.begin(), row.end());
    double z = 0.0;
    for (double v : row) z += std::exp(v - m);
    s += m + std::log(z) - row[static_cast<std::size_t>(y[i])];
  }
  return s / static_cast<double>(f.rows());
}

std::vector<std::size_t> stage_rows(std::size_t n, double subsample, Rng& rng) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  if (subsample >= 1.0) return rows;
  const std::size_t keep = std::max<std::size_t>(1, static_cast<std::size_t>(subsample * static_cast<double>(n)));
  for (std::size_t i = 0; i < keep; ++i) std::swap(rows[i], rows[i + rng.uniform_index(n - i)]);
  rows.resize(keep);
  std::sort(rows.begin(), rows.end());
  return rows;
}

void scale_leaves(RegressionTree& tree, double factor) {
  for (auto& node : tree.nodes) {
    if (node.feature < 0) node.value *= factor;
  }
}

// Newton leaves can overshoot when a leaf's hessian sum is tiny. The loss is
// convex along the stage's step, so halving it until the loss stops rising
// always ends; a stage that cannot help is zeroed.
template <typename LossAt>
void damp_stage(std::vector<RegressionTree>& trees, double previous, const LossAt& loss_at) {
  constexpr int kMaxHalvings = 60;
  for (int h = 0; h < kMaxHalvings && loss_at(trees) > previous; ++h) {
    for (auto& t : trees) scale_leaves(t, 0.5);
  }
  if (loss_at(trees) > previous) {
    for (auto& t : trees) scale_leaves(t, 0.0);
    loss_at(trees);  // callers keep the scores from the last evaluation
  }
}

}  // namespace

TrainedModel train_gbm(const Matrix& x, std::span<const int> y, std::vector<std::string> label_space,
                       const GbmConfig& config) {
  config.validate();
  const std::size_t classes = check_training_input(x, y, label_space);
  const std::size_t n = x.rows();
  Rng rng(config.seed);
  GbmParams p;
  p.learning_rate = config.learning_rate;

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  const SortedOrder full_order = presort(x, all);
  std::vector<double> residual(n);

  if (classes == 2) {
    double positives = 0.0;
    for (int c : y) positives += c == 1 ? 1.0 : 0.0;
    const double rate = positives / static_cast<double>(n);
    p.initial_scores = {std::log(rate / (1.0 - rate))};
    std::vector<double> f(n, p.initial_scores[0]);
    p.staged_loss.push_back(logistic_loss(f, y));
    std::vector<double> prob(n);
    const LeafValueFn newton = [&](std::span<const std::size_t> rows) {
      double num = 0.0, den = 0.0;
      for (std::size_t r : rows) {
        num += residual[r];
        den += prob[r] * (1.0 - prob[r]);
      }
      return den < 1e-150 ? 0.0 : num / den;
    };
    for (std::size_t stage = 0; stage < config.n_trees; ++stage) {
      for (std::size_t i = 0; i < n; ++i) {
        prob[i] = sigmoid(f[i]);
        residual[i] = (y[i] == 1 ? 1.0 : 0.0) - prob[i];
      }
      const auto rows = stage_rows(n, config.subsample, rng);
      std::vector<RegressionTree> trees;
      trees.push_back(rows.size() == n ? TreeBuilder(x, residual, full_order, config, newton).build(rows)
                                       : fit_regression_tree(x, residual, rows, config, newton));
      std::vector<double> next(n);
      damp_stage(trees, p.staged_loss.back(), [&](const std::vector<RegressionTree>& t) {
        for (std::size_t i = 0; i < n; ++i) next[i] = f[i] + config.learning_rate * t[0].predict(x.row(i));
        return logistic_loss(next, y);
      });
      f = next;
      p.stages.push_back(std::move(trees));
      p.staged_loss.push_back(logistic_loss(f, y));
    }
  } else {
    const auto priors = class_log_priors(y, classes);
    for (double lp : priors) p.initial_scores.push_back(std::max(lp, std::log(1e-12)));
    Matrix f(n, classes);
    for (std::size_t i = 0; i < n; ++i) std::copy(p.initial_scores.begin(), p.initial_scores.end(), f.row(i).begin());
    p.staged_loss.push_back(softmax_loss(f, y));
    Matrix prob(n, classes);
    const double k_factor = static_cast<double>(classes - 1) / static_cast<double>(classes);
    const LeafValueFn newton = [&](std::span<const std::size_t> rows) {
      double num = 0.0, den = 0.0;
      for (std::size_t r : rows) {
        num += residual[r];
        den += std::abs(residual[r]) * (1.0 - std::abs(residual[r]));
      }
      return den < 1e-150 ? 0.0 : k_factor * num / den;
    };
    for (std::size_t stage = 0; stage < config.n_trees; ++stage) {
      for (std::size_t i = 0; i < n; ++i) {
        auto row = prob.row(i);
        const auto src = f.row(i);
        std::copy(src.begin(), src.end(), row.begin());
        softmax_inplace(row);
      }
      const auto rows = stage_rows(n, config.subsample, rng);
      std::vector<RegressionTree> trees;
      for (std::size_t k = 0; k < classes; ++k) {
        for (std::size_t i = 0; i < n; ++i) residual[i] = (y[i] == static_cast<int>(k) ? 1.0 : 0.0) - prob(i, k);
        trees.push_back(rows.size() == n ? TreeBuilder(x, residual, full_order, config, newton).build(rows)
                                         : fit_regression_tree(x, residual, rows, config, newton));
      }
      Matrix next(n, classes);
      damp_stage(trees, p.staged_loss.back(), [&](const std::vector<RegressionTree>& t) {
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t k = 0; k < classes; ++k) next(i, k) = f(i, k) + config.learning_rate * t[k].predict(x.row(i));
        }
        return softmax_loss(next, y);
      });
      f = next;
      p.stages.push_back(std::move(trees));
      p.staged_loss.push_back(softmax_loss(f, y));
    }
  }

  TrainedModel model;
  model.kind = LearnerKind::Gbm;
  model.feature_width = x.cols();
  model.config.kind = LearnerKind::Gbm;
  model.config.gbm = config;
  model.config.seed = config.seed;
  model.metadata.seed = config.seed;
  model.params = std::move(p);
  model.label_space = std::move(label_space);
  return model;
}

TrainedModel train_model(const LearnerConfig& config, const Matrix& x, std::span<const int> y,
                         std::vector<std::string> label_space) {
  TrainedModel model;
  switch (config.kind) {
    case LearnerKind::NbMultinomial:
    case LearnerKind::NbGaussian:
      model = train_nb(x, y, std::move(label_space), config.kind, config.nb_alpha);
      break;
    case LearnerKind::Knn:
      model = train_knn(x, y, std::move(label_space), config.knn_k, config.knn_metric);
      break;
    case LearnerKind::LinearSvm:
      model = train_svm(x, y, std::move(label_space), config.svm_lambda, config.svm_epochs, config.seed);
      break;
    case LearnerKind::Gbm: {
      GbmConfig g = config.gbm;
      g.seed = config.seed;
      model = train_gbm(x, y, std::move(label_space), g);
      break;
    }
  }
  model.config = config;
  model.metadata.seed = config.seed;
  return model;
}

// ---------------------------------------------------------------------------
// Prediction

Predictions predict(const TrainedModel& model, const Matrix& x) {
  if (x.cols() != model.feature_width) {
    fail(ErrorCode::DimensionMismatch, "model expects " + std::to_string(model.feature_width) + " features, got " +
                                           std::to_string(x.cols()));
  }
  const std::size_t classes = model.label_space.size();
  Predictions out;
  out.scores = Matrix(x.rows(), classes);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto row = x.row(r);
    auto scores = out.scores.row(r);
    std::visit(
        [&](const auto& p) {
          using P = std::decay_t<decltype(p)>;
          if constexpr (std::is_same_v<P, NbMultinomialParams>) {
            for (std::size_t c = 0; c < classes; ++c) scores[c] = p.log_prior[c] + dot(p.log_likelihood.row(c), row);
            softmax_inplace(scores);
          } else if constexpr (std::is_same_v<P, NbGaussianParams>) {
            for (std::size_t c = 0; c < classes; ++c) {
              double s = p.log_prior[c];
              for (std::size_t j = 0; j < row.size(); ++j) {
                const double v = p.variance(c, j);
                const double diff = row[j] - p.mean(c, j);
                s -= 0.5 * (std::log(2.0 * 3.141592653589793 * v) + diff * diff / v);
              }
              scores[c] = s;
            }
            softmax_inplace(scores);
          } else if constexpr (std::is_same_v<P, KnnParams>) {
            std::vector<std::pair<double, std::size_t>> dist(p.points.rows());
            for (std::size_t i = 0; i < p.points.rows(); ++i) dist[i] = {knn_distance(row, p.points.row(i), p.metric), i};
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(p.k), dist.end());
            for (std::size_t i = 0; i < p.k; ++i) {
              scores[static_cast<std::size_t>(p.labels[dist[i].second])] += 1.0 / static_cast<double>(p.k);
            }
          } else if constexpr (std::is_same_v<P, SvmParams>) {
            if (p.weights.rows() == 1) {
              const double m = dot(p.weights.row(0), row) + p.bias[0];
              scores[0] = -m;
              scores[1] = m;
            } else {
              for (std::size_t c = 0; c < classes; ++c) scores[c] = dot(p.weights.row(c), row) + p.bias[c];
            }
          } else if constexpr (std::is_same_v<P, GbmParams>) {
            if (p.initial_scores.size() == 1) {
              double f = p.initial_scores[0];
              for (const auto& stage : p.stages) f += p.learning_rate * stage[0].predict(row);
              const double prob = sigmoid(f);
              scores[0] = 1.0 - prob;
              scores[1] = prob;
            } else {
              for (std::size_t c = 0; c < classes; ++c) scores[c] = p.initial_scores[c];
              for (const auto& stage : p.stages) {
                for (std::size_t c = 0; c < classes; ++c) scores[c] += p.learning_rate * stage[c].predict(row);
              }
              softmax_inplace(scores);
            }
          }
        },
        model.params);
    out.labels.push_back(argmax(scores));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

constexpr int kModelVersion = 1;

nlohmann::json matrix_json(const Matrix& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", io::encode_doubles(m.data())}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
  Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = io::decode_doubles(j.at("data").get<std::string>());
  if (data.size() != m.data().size()) fail(ErrorCode::BadFormat, "matrix payload size mismatch");
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

nlohmann::json tree_json(const RegressionTree& t) {
  std::vector<int> feature;
  std::vector<std::size_t> left, right;
  std::vector<double> threshold, value, improvement;
  for (const auto& n : t.nodes) {
    feature.push_back(n.feature);
    left.push_back(n.left);
    right.push_back(n.right);
    threshold.push_back(n.threshold);
    value.push_back(n.value);
    improvement.push_back(n.improvement);
  }
  return {{"feature", feature},
          {"left", left},
          {"right", right},
          {"threshold", io::encode_doubles(threshold)},
          {"value", io::encode_doubles(value)},
          {"improvement", io::encode_doubles(improvement)}};
}

RegressionTree tree_from_json(const nlohmann::json& j) {
  const auto feature = j.at("feature").get<std::vector<int>>();
  const auto left = j.at("left").get<std::vector<std::size_t>>();
  const auto right = j.at("right").get<std::vector<std::size_t>>();
  const auto threshold = io::decode_doubles(j.at("threshold").get<std::string>());
  const auto value = io::decode_doubles(j.at("value").get<std::string>());
  const auto improvement = io::decode_doubles(j.at("improvement").get<std::string>());
  RegressionTree t;
  for (std::size_t i = 0; i < feature.size(); ++i) {
    RegressionTree::Node n;
    n.feature = feature[i];
    n.left = left.at(i);
    n.right = right.at(i);
    n.threshold = threshold.at(i);
    n.value = value.at(i);
    n.improvement = improvement.at(i);
    if (n.feature >= 0 && (n.left >= feature.size() || n.right >= feature.size())) {
      fail(ErrorCode::BadFormat, "tree child index out of range");
    }
    t.nodes.push_back(n);
  }
  return t;
}

}  // namespace

nlohmann::json model_to_json(const TrainedModel& model) {
  nlohmann::json payload = std::visit(
      [](const auto& p) -> nlohmann::json {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, NbMultinomialParams>) {
          return {{"log_likelihood", matrix_json(p.log_likelihood)}, {"log_prior", io::encode_doubles(p.log_prior)}};
        } else if constexpr (std::is_same_v<P, NbGaussianParams>) {
          return {{"mean", matrix_json(p.mean)},
                  {"variance", matrix_json(p.variance)},
                  {"log_prior", io::encode_doubles(p.log_prior)}};
        } else if constexpr (std::is_same_v<P, KnnParams>) {
          return {{"points", matrix_json(p.points)}, {"labels", p.labels}, {"k", p.k}, {"metric", to_string(p.metric)}};
        } else if constexpr (std::is_same_v<P, SvmParams>) {
          return {{"weights", matrix_json(p.weights)}, {"bias", io::encode_doubles(p.bias)}};
        } else {
          nlohmann::json stages = nlohmann::json::array();
          for (const auto& stage : p.stages) {
            nlohmann::json trees = nlohmann::json::array();
            for (const auto& t : stage) trees.push_back(tree_json(t));
            stages.push_back(std::move(trees));
          }
          return {{"initial_scores", io::encode_doubles(p.initial_scores)},
                  {"learning_rate", io::encode_doubles(std::vector<double>{p.learning_rate})},
                  {"staged_loss", io::encode_doubles(p.staged_loss)},
                  {"stages", stages}};
        }
      },
      model.params);
  return {{"format", "harass-model"},
          {"version", kModelVersion},
          {"kind", to_string(model.kind)},
          {"label_space", model.label_space},
          {"feature_spec", model.metadata.feature_spec},
          {"feature_width", model.feature_width},
          {"metadata", {{"seed", model.metadata.seed}, {"corpus_hash", model.metadata.corpus_hash}}},
          {"learner", model.config.to_json()},
          {"pipeline", model.pipeline},
          {"payload", payload}};
}

TrainedModel model_from_json(const nlohmann::json& j) {
  try {
    if (j.at("format") != "harass-model") fail(ErrorCode::BadFormat, "not a model file");
    if (j.at("version").get<int>() != kModelVersion) fail(ErrorCode::BadFormat, "unsupported model version");
    TrainedModel m;
    m.kind = parse_learner_kind(j.at("kind").get<std::string>());
    m.label_space = j.at("label_space").get<std::vector<std::string>>();
    m.metadata.feature_spec = j.at("feature_spec").get<std::string>();
    m.feature_width = j.at("feature_width").get<std::size_t>();
    m.metadata.seed = j.at("metadata").at("seed").get<std::uint64_t>();
    m.metadata.corpus_hash = j.at("metadata").at("corpus_hash").get<std::string>();
    m.config = LearnerConfig::from_json(j.at("learner"));
    m.pipeline = j.at("pipeline");
    const auto& p = j.at("payload");
    switch (m.kind) {
      case LearnerKind::NbMultinomial:
        m.params = NbMultinomialParams{matrix_from_json(p.at("log_likelihood")),
                                       io::decode_doubles(p.at("log_prior").get<std::string>())};
        break;
      case LearnerKind::NbGaussian:
        m.params = NbGaussianParams{matrix_from_json(p.at("mean")), matrix_from_json(p.at("variance")),
                                    io::decode_doubles(p.at("log_prior").get<std::string>())};
        break;
      case LearnerKind::Knn:
        m.params = KnnParams{matrix_from_json(p.at("points")), p.at("labels").get<std::vector<int>>(),
                             p.at("k").get<std::size_t>(), parse_knn_metric(p.at("metric").get<std::string>())};
        break;
      case LearnerKind::LinearSvm:
        m.params = SvmParams{matrix_from_json(p.at("weights")), io::decode_doubles(p.at("bias").get<std::string>())};
        break;
      case LearnerKind::Gbm: {
        GbmParams g;
        g.initial_scores = io::decode_doubles(p.at("initial_scores").get<std::string>());
        g.learning_rate = io::decode_doubles(p.at("learning_rate").get<std::string>()).at(0);
        g.staged_loss = io::decode_doubles(p.at("staged_loss").get<std::string>());
        for (const auto& stage : p.at("stages")) {
          std::vector<RegressionTree> trees;
          for (const auto& t : stage) trees.push_back(tree_from_json(t));
          g.stages.push_back(std::move(trees));
        }
        m.params = std::move(g);
        break;
      }
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadFormat, std::string("model file: ") + e.what());
  }
}

void save_model(const TrainedModel& model, const std::filesystem::path& path) {
  io::write_file(path, model_to_json(model).dump(1) + "\n");
}

TrainedModel load_model(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadFormat, path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

}  // namespace harass
