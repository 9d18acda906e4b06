#include "harass/evaluate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "harass/error.hpp"
#include "harass/io.hpp"
#include "harass/random.hpp"

namespace harass {

ConfusionMatrix::ConfusionMatrix(std::vector<std::string> label_space)
    : labels_(std::move(label_space)), counts_(labels_.size() * labels_.size(), 0) {}

void ConfusionMatrix::add(std::size_t truth, std::size_t predicted, std::uint64_t n) {
  counts_.at(truth * labels_.size() + predicted) += n;
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (auto c : counts_) t += c;
  return t;
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
  if (other.labels_ != labels_) fail(ErrorCode::InvalidArgument, "confusion matrices over different label spaces");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
  return *this;
}

ConfusionMatrix confusion(std::span<const int> truth, std::span<const int> predicted,
                          std::vector<std::string> label_space) {
  if (truth.size() != predicted.size()) fail(ErrorCode::LengthMismatch, "truth and predictions differ in length");
  ConfusionMatrix cm(std::move(label_space));
  const auto in_range = [&](int c) { return c >= 0 && static_cast<std::size_t>(c) < cm.classes(); };
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (!in_range(truth[i]) || !in_range(predicted[i])) {
      fail(ErrorCode::UnknownLabel, "label index outside the label space at position " + std::to_string(i));
    }
    cm.add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i]));
  }
  return cm;
}

namespace {

double ratio(std::uint64_t num, std::uint64_t den, const std::string& what, std::vector<std::string>& warnings) {
  if (den == 0) {
    warnings.push_back(what + " undefined (0/0), reported as 0");
    return 0.0;
  }
  return static_cast<double>(num) / static_cast<double>(den);
}

double f_score(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

ClassMetrics class_metrics(const ConfusionMatrix& cm, std::size_t c, std::vector<std::string>& warnings) {
  std::uint64_t tp = cm.at(c, c), predicted = 0, actual = 0;
  for (std::size_t j = 0; j < cm.classes(); ++j) {
    predicted += cm.at(j, c);
    actual += cm.at(c, j);
  }
  ClassMetrics m;
  m.label = cm.label_space()[c];
  m.precision = ratio(tp, predicted, "precision of " + m.label, warnings);
  m.recall = ratio(tp, actual, "recall of " + m.label, warnings);
  m.f_score = f_score(m.precision, m.recall);
  m.support = actual;
  return m;
}

std::uint64_t trace(const ConfusionMatrix& cm) {
  std::uint64_t t = 0;
  for (std::size_t c = 0; c < cm.classes(); ++c) t += cm.at(c, c);
  return t;
}

}  // namespace

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["per_class"] = nlohmann::json::array();
  for (const auto& c : per_class) {
    j["per_class"].push_back(
        {{"label", c.label}, {"precision", c.precision}, {"recall", c.recall}, {"f_score", c.f_score},
         {"support", c.support}});
  }
  const auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  const auto avg = [](const std::optional<AveragedMetrics>& v) {
    return v ? nlohmann::json{{"precision", v->precision}, {"recall", v->recall}, {"f_score", v->f_score}}
             : nlohmann::json();
  };
  j["accuracy"] = opt(accuracy);
  j["specificity"] = opt(specificity);
  j["micro"] = avg(micro);
  j["macro"] = avg(macro);
  j["warnings"] = warnings;
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    for (const auto& c : j.at("per_class")) {
      r.per_class.push_back({c.at("label").get<std::string>(), c.at("precision").get<double>(),
                             c.at("recall").get<double>(), c.at("f_score").get<double>(),
                             c.at("support").get<std::uint64_t>()});
    }
    if (!j.at("accuracy").is_null()) r.accuracy = j.at("accuracy").get<double>();
    if (!j.at("specificity").is_null()) r.specificity = j.at("specificity").get<double>();
    const auto avg = [](const nlohmann::json& a) {
      return AveragedMetrics{a.at("precision").get<double>(), a.at("recall").get<double>(),
                             a.at("f_score").get<double>()};
    };
    if (!j.at("micro").is_null()) r.micro = avg(j.at("micro"));
    if (!j.at("macro").is_null()) r.macro = avg(j.at("macro"));
    r.warnings = j.value("warnings", std::vector<std::string>{});
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::BadFormat, std::string("metrics report: ") + e.what());
  }
}

MetricsReport binary_metrics(const ConfusionMatrix& cm, std::size_t positive) {
  if (cm.classes() != 2) fail(ErrorCode::NotBinary, "binary metrics need a 2x2 confusion matrix");
  if (positive > 1) fail(ErrorCode::InvalidArgument, "positive class must be 0 or 1");
  const std::size_t negative = 1 - positive;
  MetricsReport r;
  r.per_class.push_back(class_metrics(cm, positive, r.warnings));
  const std::uint64_t tn = cm.at(negative, negative), fp = cm.at(negative, positive);
  r.specificity = ratio(tn, tn + fp, "specificity", r.warnings);
  r.accuracy = ratio(trace(cm), cm.total(), "accuracy", r.warnings);
  return r;
}

MetricsReport multiclass_metrics(const ConfusionMatrix& cm) {
  if (cm.classes() < 2) fail(ErrorCode::InvalidArgument, "multi-class metrics need at least two classes");
  MetricsReport r;
  AveragedMetrics macro;
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    r.per_class.push_back(class_metrics(cm, c, r.warnings));
    macro.precision += r.per_class.back().precision;
    macro.recall += r.per_class.back().recall;
    macro.f_score += r.per_class.back().f_score;
  }
  const double n = static_cast<double>(cm.classes());
  macro.precision /= n;
  macro.recall /= n;
  macro.f_score /= n;
  // Pooled over classes, every error is one FP and one FN, so the pooled
  // denominators both equal the total.
  AveragedMetrics micro;
  const std::uint64_t tp = trace(cm), total = cm.total();
  micro.precision = ratio(tp, total, "micro precision", r.warnings);
  micro.recall = micro.precision;
  micro.f_score = f_score(micro.precision, micro.recall);
  r.accuracy = micro.precision;
  r.micro = micro;
  r.macro = macro;
  return r;
}

MetricsReport metrics_for(const ConfusionMatrix& cm, std::size_t positive) {
  return cm.classes() == 2 ? binary_metrics(cm, positive) : multiclass_metrics(cm);
}

// ---------------------------------------------------------------------------
// Aggregation

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
  }
};

// Flattens a report into its numeric fields in a fixed order.
std::vector<double> flatten(const MetricsReport& r) {
  std::vector<double> v;
  for (const auto& c : r.per_class) {
    v.insert(v.end(), {c.precision, c.recall, c.f_score, static_cast<double>(c.support)});
  }
  for (const auto& o : {r.accuracy, r.specificity}) {
    if (o) v.push_back(*o);
  }
  for (const auto& a : {r.micro, r.macro}) {
    if (a) v.insert(v.end(), {a->precision, a->recall, a->f_score});
  }
  return v;
}

MetricsReport unflatten(const MetricsReport& shape, const std::vector<double>& v) {
  MetricsReport r = shape;
  r.warnings.clear();
  std::size_t i = 0;
  for (auto& c : r.per_class) {
    c.precision = v[i++];
    c.recall = v[i++];
    c.f_score = v[i++];
    c.support = static_cast<std::uint64_t>(std::llround(v[i++]));
  }
  for (auto* o : {&r.accuracy, &r.specificity}) {
    if (*o) *o = v[i++];
  }
  for (auto* a : {&r.micro, &r.macro}) {
    if (*a) {
      (*a)->precision = v[i++];
      (*a)->recall = v[i++];
      (*a)->f_score = v[i++];
    }
  }
  return r;
}

std::uint64_t fold_seed(std::uint64_t seed, std::uint64_t stream) {
  return Rng::mix(seed ^ Rng::mix(stream + 0x9e3779b97f4a7c15ULL));
}

}  // namespace

std::pair<MetricsReport, MetricsReport> aggregate_reports(std::span<const MetricsReport> reports) {
  if (reports.empty()) fail(ErrorCode::InvalidArgument, "no reports to aggregate");
  const auto first = flatten(reports.front());
  std::vector<Moments> m(first.size());
  std::set<std::string> warnings;
  for (const auto& r : reports) {
    const auto v = flatten(r);
    if (v.size() != first.size()) fail(ErrorCode::InvalidArgument, "fold reports differ in shape");
    for (std::size_t i = 0; i < v.size(); ++i) m[i].add(v[i]);
    warnings.insert(r.warnings.begin(), r.warnings.end());
  }
  const double n = static_cast<double>(reports.size());
  std::vector<double> mean(m.size()), sd(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    mean[i] = m[i].sum / n;
    sd[i] = std::sqrt(std::max(0.0, m[i].sum_sq / n - mean[i] * mean[i]));
  }
  MetricsReport avg = unflatten(reports.front(), mean);
  avg.warnings.assign(warnings.begin(), warnings.end());
  return {std::move(avg), unflatten(reports.front(), sd)};
}

CvResult cross_validate(std::span<const int> labels, const std::vector<std::string>& label_space,
                        const FoldPlan& plan, const Featurizer& featurize, const FoldLearner& learn,
                        CvOptions options) {
  if (plan.size() != labels.size()) fail(ErrorCode::LengthMismatch, "fold plan does not match the label count");
  const std::size_t jobs = plan.k * plan.repeats;
  if (jobs == 0) fail(ErrorCode::InvalidArgument, "empty fold plan");
  std::vector<FoldResult> results(jobs);

  const auto run = [&](std::size_t job) {
    const std::size_t repeat = job / plan.k, fold = job % plan.k;
    const auto train = plan.train_indices(repeat, fold);
    const auto test = plan.test_indices(repeat, fold);
    auto [x_train, x_test] = featurize(train, test);
    std::vector<int> y_train, y_test;
    for (std::size_t i : train) y_train.push_back(labels[i]);
    for (std::size_t i : test) y_test.push_back(labels[i]);
    const auto predicted = learn(x_train, y_train, x_test, fold_seed(plan.seed, job));
    FoldResult& r = results[job];
    r.repeat = repeat;
    r.fold = fold;
    r.confusion = confusion(y_test, predicted, label_space);
    r.metrics = metrics_for(r.confusion, options.positive);
  };

  const std::size_t threads = std::clamp<std::size_t>(options.threads, 1, jobs);
  if (threads == 1) {
    for (std::size_t j = 0; j < jobs; ++j) run(j);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t j = next++; j < jobs; j = next++) {
          try {
            run(j);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
  }

  CvResult out;
  out.pooled = options.pooled;
  std::vector<MetricsReport> reports;
  for (const auto& r : results) reports.push_back(r.metrics);
  std::tie(out.mean, out.stddev) = aggregate_reports(reports);
  if (options.pooled) {
    ConfusionMatrix sum(label_space);
    for (const auto& r : results) sum += r.confusion;
    out.mean = metrics_for(sum, options.positive);
  }
  out.folds = std::move(results);
  return out;
}

CvResult cross_validate(const Corpus& corpus, std::span<const int> labels,
                        const std::vector<std::string>& label_space, const FeatureSpec& spec,
                        const FeatureResources& resources, const LearnerConfig& learner, const FoldPlan& plan,
                        PipelineOptions pipeline_options, CvOptions options, const FoldObserver& observer) {
  if (labels.size() != corpus.size()) fail(ErrorCode::LengthMismatch, "labels do not match the corpus");
  const auto docs = tokenize_corpus(corpus);
  const auto ids = corpus_ids(corpus);
  FeatureResources fold_resources = resources;
  fold_resources.tfidf = nullptr;

  // Featurizer and learner are called from one fold at a time per thread;
  // the observer needs the fold position, recovered from the train rows.
  std::mutex observer_mutex;
  const auto featurize = [&](std::span<const std::size_t> train, std::span<const std::size_t> test) {
    std::vector<TokenStream> train_docs, test_docs;
    std::vector<std::string> train_ids, test_ids;
    for (std::size_t i : train) {
      train_docs.push_back(docs[i]);
      train_ids.push_back(ids[i]);
    }
    for (std::size_t i : test) {
      test_docs.push_back(docs[i]);
      test_ids.push_back(ids[i]);
    }
    const auto pipeline = FeaturePipeline::fit(train_docs, spec, fold_resources, pipeline_options);
    if (observer) {
      // Identify the fold by its test rows.
      for (std::size_t r = 0; r < plan.repeats; ++r) {
        const std::size_t f = plan.assignments[r][test.front()];
        if (plan.test_indices(r, f) == std::vector<std::size_t>(test.begin(), test.end())) {
          std::lock_guard lock(observer_mutex);
          observer(r, f, pipeline, train);
          break;
        }
      }
    }
    return std::pair{pipeline.transform(train_docs, train_ids, fold_resources).rows,
                     pipeline.transform(test_docs, test_ids, fold_resources).rows};
  };
  const auto learn = [&](const Matrix& x_train, std::span<const int> y_train, const Matrix& x_test,
                         std::uint64_t seed) {
    LearnerConfig config = learner;
    config.seed = seed;
    const auto model = train_model(config, x_train, y_train, label_space);
    return predict(model, x_test).labels;
  };
  return cross_validate(labels, label_space, plan, featurize, learn, options);
}

// ---------------------------------------------------------------------------
// Task labels

std::vector<std::string> binary_label_space() {
  return {std::string(kNonHarassingClass), std::string(kHarassingClass)};
}

std::vector<std::string> multiclass_label_space() {
  std::vector<std::string> labels;
  for (auto t : kAllTypes) labels.emplace_back(to_string(t));
  labels.emplace_back(kNonHarassingClass);
  return labels;
}

std::vector<int> task_labels(const Corpus& corpus, const std::vector<std::string>& label_space) {
  const auto index_of = [&](std::string_view name) {
    const auto it = std::find(label_space.begin(), label_space.end(), name);
    if (it == label_space.end()) fail(ErrorCode::UnknownLabel, "class '" + std::string(name) + "' not in label space");
    return static_cast<int>(it - label_space.begin());
  };
  const bool binary = label_space == binary_label_space();
  std::vector<int> out;
  out.reserve(corpus.size());
  for (const auto& t : corpus) {
    if (binary) {
      out.push_back(index_of(t.label == Label::Harassing ? kHarassingClass : kNonHarassingClass));
    } else {
      out.push_back(index_of(t.label == Label::Harassing ? to_string(t.type) : kNonHarassingClass));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transfer

TransferReport transfer_evaluate(const TrainedModel& model, const Corpus& external,
                                 const FeatureResources& resources) {
  if (model.pipeline.is_null()) fail(ErrorCode::MissingResource, "model carries no fitted feature pipeline");
  const auto pipeline = FeaturePipeline::from_json(model.pipeline);
  if (pipeline.width() != model.feature_width) {
    fail(ErrorCode::DimensionMismatch, "pipeline width does not match the model");
  }
  const auto truth = task_labels(external, model.label_space);
  const auto x = pipeline.transform(tokenize_corpus(external), corpus_ids(external), resources);
  TransferReport out;
  out.predicted = predict(model, x.rows).labels;
  out.confusion = confusion(truth, out.predicted, model.label_space);
  out.metrics = metrics_for(out.confusion);

  std::uint64_t harassing_total = 0;
  for (std::size_t c = 0; c < model.label_space.size(); ++c) {
    if (model.label_space[c] == kNonHarassingClass) continue;
    for (std::size_t j = 0; j < model.label_space.size(); ++j) harassing_total += out.confusion.at(c, j);
  }
  for (std::size_t c = 0; c < model.label_space.size(); ++c) {
    if (model.label_space[c] == kNonHarassingClass) continue;
    std::uint64_t n = 0;
    for (std::size_t j = 0; j < model.label_space.size(); ++j) n += out.confusion.at(c, j);
    out.proportions.push_back(
        {model.label_space[c],
         harassing_total ? 100.0 * static_cast<double>(n) / static_cast<double>(harassing_total) : 0.0});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reports

namespace {

std::string cell(std::optional<double> v, ReportFormat format) {
  if (!v) return "";
  if (format == ReportFormat::Csv) return io::format_double(*v);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", *v);
  return buf;
}

void emit_row(std::ostringstream& out, ReportFormat format, const std::vector<std::string>& cells) {
  if (format == ReportFormat::Csv) {
    io::write_record(out, cells, ',');
    return;
  }
  out << '|';
  for (const auto& c : cells) out << ' ' << c << " |";
  out << '\n';
}

void emit_header(std::ostringstream& out, ReportFormat format, const std::vector<std::string>& header) {
  emit_row(out, format, header);
  if (format == ReportFormat::Markdown) {
    out << '|';
    for (std::size_t i = 0; i < header.size(); ++i) out << (i == 0 ? " --- |" : " ---: |");
    out << '\n';
  }
}

}  // namespace

std::string emit_report(const MetricsReport& report, ReportFormat format) {
  std::ostringstream out;
  emit_header(out, format, {"Class", "Precision", "Recall", "F-Score", "Accuracy", "Specificity", "Support"});
  const bool binary = report.is_binary();
  for (const auto& c : report.per_class) {
    emit_row(out, format,
             {c.label, cell(c.precision, format), cell(c.recall, format), cell(c.f_score, format),
              binary ? cell(report.accuracy, format) : "", binary ? cell(report.specificity, format) : "",
              std::to_string(c.support)});
  }
  if (!report.per_class.empty()) {
    for (const auto& [name, avg] : {std::pair{"micro", report.micro}, std::pair{"macro", report.macro}}) {
      if (!avg) continue;
      emit_row(out, format,
               {name, cell(avg->precision, format), cell(avg->recall, format), cell(avg->f_score, format),
                name == std::string_view("micro") ? cell(report.accuracy, format) : "", "", ""});
    }
  }
  return out.str();
}

std::string emit_transfer_report(const TransferReport& report, ReportFormat format) {
  std::ostringstream out;
  emit_header(out, format, {"Class", "Precision", "Recall", "F-Score", "Proportion"});
  for (const auto& c : report.metrics.per_class) {
    std::string proportion;
    for (const auto& p : report.proportions) {
      if (p.label == c.label) proportion = cell(p.percent, format);
    }
    emit_row(out, format,
             {c.label, cell(c.precision, format), cell(c.recall, format), cell(c.f_score, format), proportion});
  }
  for (const auto& [name, avg] : {std::pair{"micro", report.metrics.micro}, std::pair{"macro", report.metrics.macro}}) {
    if (!avg) continue;
    emit_row(out, format,
             {name, cell(avg->precision, format), cell(avg->recall, format), cell(avg->f_score, format), ""});
  }
  return out.str();
}

}  // namespace harass
