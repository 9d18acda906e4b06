#include "cli.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <sstream>

#include "CLI11.hpp"
#include "harass/error.hpp"
#include "harass/io.hpp"
#include "harass/random.hpp"
#include "support.hpp"

namespace harass::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  // shared
  std::string corpus;
  std::string out;
  std::uint64_t seed = 1;
  std::string stoplist;
  std::size_t top = 25;
  // stats / freq
  std::string type;
  std::string label;
  // analyze
  double threshold = 0.5;
  std::string std_mode = "pooled";
  bool prune = false;
  // embed-train
  std::string mode = "skipgram";
  bool subword = false;
  std::size_t minn = 3;
  std::size_t maxn = 6;
  double emb_lr = 0.025;
  std::size_t emb_threads = 1;
  // project2d
  std::string embeddings;
  std::string tokens;
  std::string tokens_file;
  // vectorize
  std::string format = "csv";
  // train / cv / predict / transfer
  std::string task = "combined";
  bool no_balance = false;
  std::size_t folds = 10;
  std::size_t repeats = 5;
  std::size_t threads = 1;
  bool pooled = false;
  std::string model;
  // report
  std::vector<std::string> inputs;

  FeatureOptions features;
  LearnerOptions learner;
};

struct Run {
  Options& o;
  CLI::App* sub;
  std::ostream& out;

  // Resolved option values for the manifest; help and config excluded.
  nlohmann::json option_values() const {
    nlohmann::json j = nlohmann::json::object();
    for (const CLI::Option* opt : sub->get_options()) {
      const auto& names = opt->get_lnames();
      if (names.empty() || names.front() == "help" || names.front() == "out") continue;
      if (opt->count() > 0) {
        const auto& results = opt->results();
        j[names.front()] = results.size() == 1 ? nlohmann::json(results.front()) : nlohmann::json(results);
      } else {
        j[names.front()] = opt->get_default_str();
      }
    }
    return j;
  }

  nlohmann::json entry(const nlohmann::json& inputs) const {
    return {{"command", sub->get_name()}, {"options", option_values()}, {"inputs", inputs}, {"seed", o.seed}};
  }
};

std::string csv_line(const std::vector<std::string>& fields) {
  std::ostringstream s;
  io::write_record(s, fields, ',');
  return s.str();
}

// ---------------------------------------------------------------------------

void cmd_stats(const Run& r) {
  nlohmann::json inputs;
  const Corpus corpus = read_corpus(r.o.corpus, inputs);
  const auto stats = corpus_stats(corpus);
  std::string text = csv_line({"type", "annotated", "harassing", "non_harassing"});
  const auto row = [&](std::string name, const TypeCounts& c) {
    text += csv_line({std::move(name), std::to_string(c.annotated), std::to_string(c.harassing),
                      std::to_string(c.non_harassing)});
  };
  for (auto t : kAllTypes) row(std::string(to_string(t)), stats.per_type[static_cast<std::size_t>(t)]);
  row("combined", stats.combined);
  r.out << text;
  if (!r.o.out.empty()) {
    OutputDir dir(r.o.out, "stats");
    dir.write("stats.csv", text);
    auto e = r.entry(inputs);
    e["corpus_hash"] = io::hex64(corpus.content_hash());
    dir.finish(e);
  }
}

void cmd_kappa(const Run& r) {
  const std::string content = io::read_file(r.o.corpus);
  nlohmann::json inputs = {{r.o.corpus, io::hex64(io::fnv1a64(content))}};
  const char delim = format_for_path(r.o.corpus) == CorpusFormat::Tsv ? '\t' : ',';
  const auto records = io::read_delimited(content, delim);
  if (records.empty()) fail(ErrorCode::EmptyCorpus, r.o.corpus + " is empty");
  const auto& header = records.front().fields;
  const auto col = std::find(header.begin(), header.end(), "votes");
  if (col == header.end()) fail(ErrorCode::MissingResource, "corpus has no votes column");
  const auto vi = static_cast<std::size_t>(col - header.begin());
  std::vector<std::vector<AnnotationVote>> votes;
  std::size_t raters = 0;
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& f = records[i].fields;
    if (vi >= f.size() || f[vi].empty()) continue;
    votes.push_back(parse_votes(f[vi]));
    raters = std::max(raters, votes.back().size());
  }
  if (raters < 2) fail(ErrorCode::TooFewItems, "kappa needs at least two raters");
  std::string text = csv_line({"rater_a", "rater_b", "items", "kappa"});
  double sum = 0.0;
  std::size_t pairs = 0;
  for (std::size_t a = 0; a < raters; ++a) {
    for (std::size_t b = a + 1; b < raters; ++b) {
      std::vector<int> va, vb;
      for (const auto& v : votes) {
        if (v.size() > b) {
          va.push_back(static_cast<int>(v[a]));
          vb.push_back(static_cast<int>(v[b]));
        }
      }
      if (va.empty()) continue;
      const double k = cohen_kappa<int>(va, vb);
      sum += k;
      ++pairs;
      text += csv_line({std::to_string(a + 1), std::to_string(b + 1), std::to_string(va.size()), io::format_double(k)});
    }
  }
  text += csv_line({"mean", "", std::to_string(votes.size()), io::format_double(sum / static_cast<double>(pairs))});
  r.out << text;
  if (!r.o.out.empty()) {
    OutputDir dir(r.o.out, "kappa");
    dir.write("kappa.csv", text);
    dir.finish(r.entry(inputs));
  }
}

std::string freq_csv(const std::vector<std::pair<std::string, std::size_t>>& words) {
  std::string text = csv_line({"token", "count"});
  for (const auto& [w, n] : words) text += csv_line({w, std::to_string(n)});
  return text;
}

StdMode parse_std_mode(const std::string& s) {
  if (s == "pooled") return StdMode::Pooled;
  if (s == "control") return StdMode::Control;
  if (s == "pooled-population") return StdMode::PooledPopulation;
  fail(ErrorCode::Config, "unknown std mode '" + s + "' (pooled, control, pooled-population)");
}

void cmd_analyze(const Run& r) {
  nlohmann::json inputs;
  const Corpus corpus = read_corpus(r.o.corpus, inputs);
  const auto lexicon = load_lexicon(r.o.features.lexicon);
  inputs[r.o.features.lexicon] = file_hash(r.o.features.lexicon);
  std::optional<std::set<std::string>> stop;
  if (!r.o.stoplist.empty()) {
    stop = load_stoplist(r.o.stoplist);
    inputs[r.o.stoplist] = file_hash(r.o.stoplist);
  }
  EffectSizeOptions eo;
  eo.mode = parse_std_mode(r.o.std_mode);
  eo.prune = r.o.prune;
  eo.threshold = r.o.threshold;
  const auto table = effect_size_table(corpus, lexicon, all_type_columns(), eo);
  OutputDir dir(r.o.out, "analyze");
  dir.write("effect_sizes.csv", table.to_csv());
  const auto* sp = stop ? &*stop : nullptr;
  dir.write("freq_harassing.csv",
            freq_csv(frequent_words(filter_corpus(corpus, std::nullopt, Label::Harassing), r.o.top, sp)));
  dir.write("freq_nonharassing.csv",
            freq_csv(frequent_words(filter_corpus(corpus, std::nullopt, Label::NonHarassing), r.o.top, sp)));
  dir.finish(r.entry(inputs));
  r.out << "wrote effect sizes for " << table.features.size() << " features to " << dir.path().string() << "\n";
}

void cmd_freq(const Run& r) {
  nlohmann::json inputs;
  const Corpus corpus = read_corpus(r.o.corpus, inputs);
  std::optional<std::set<std::string>> stop;
  if (!r.o.stoplist.empty()) {
    stop = load_stoplist(r.o.stoplist);
    inputs[r.o.stoplist] = file_hash(r.o.stoplist);
  }
  std::optional<HarassmentType> type;
  std::optional<Label> label;
  if (!r.o.type.empty()) type = parse_type(r.o.type);
  if (!r.o.label.empty()) label = parse_label(r.o.label);
  const auto text = freq_csv(frequent_words(filter_corpus(corpus, type, label), r.o.top, stop ? &*stop : nullptr));
  r.out << text;
  if (!r.o.out.empty()) {
    OutputDir dir(r.o.out, "freq");
    dir.write("freq.csv", text);
    dir.finish(r.entry(inputs));
  }
}

void cmd_embed_train(const Run& r) {
  const auto& f = r.o.features;
  nlohmann::json inputs;
  std::vector<TokenStream> sentences;
  if (!f.sentences.empty()) {
    const std::string content = io::read_file(f.sentences);
    inputs[f.sentences] = io::hex64(io::fnv1a64(content));
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) sentences.push_back(tokenize(line));
    }
  } else if (!r.o.corpus.empty()) {
    sentences = tokenize_corpus(read_corpus(r.o.corpus, inputs));
  } else {
    fail(ErrorCode::Config, "embed-train needs --sentences or --corpus");
  }
  EmbeddingConfig config;
  config.dim = f.emb_dim;
  config.window = f.emb_window;
  config.min_count = f.emb_min_count;
  config.epochs = f.emb_epochs;
  config.negatives = f.emb_negatives;
  config.mode = parse_embedding_mode(r.o.mode);
  config.initial_lr = r.o.emb_lr;
  config.threads = r.o.emb_threads;
  config.seed = r.o.seed;
  if (r.o.subword) config.subword = SubwordSettings{r.o.minn, r.o.maxn, f.emb_buckets};
  config.add_context_vectors = f.emb_add_context;
  config.validate();
  TrainingReport report;
  const auto table = train_embeddings(sentences, config, &report);
  OutputDir dir(r.o.out, "embed-train");
  table.save(dir.file("embeddings.vec"));
  dir.record("embeddings.vec");
  if (table.is_subword()) dir.record("embeddings.vec.bkt");
  std::string loss = csv_line({"epoch", "probe_loss"});
  for (std::size_t e = 0; e < report.probe_losses.size(); ++e) {
    loss += csv_line({std::to_string(e), io::format_double(report.probe_losses[e])});
  }
  dir.write("training_loss.csv", loss);
  auto e = r.entry(inputs);
  e["vocabulary"] = table.vocab().size();
  e["processed_tokens"] = report.processed_tokens;
  dir.finish(e);
  r.out << "trained " << table.vocab().size() << " word vectors (dim " << table.dim() << ") into "
        << dir.path().string() << "\n";
}

void cmd_project2d(const Run& r) {
  const auto table = load_embeddings(r.o.embeddings);
  nlohmann::json inputs = {{r.o.embeddings, file_hash(r.o.embeddings)}};
  std::vector<std::string> tokens;
  std::string list = r.o.tokens;
  if (!r.o.tokens_file.empty()) {
    list = io::read_file(r.o.tokens_file);
    inputs[r.o.tokens_file] = file_hash(r.o.tokens_file);
  }
  std::string token;
  for (char c : list + "\n") {
    if (c == ',' || c == '\n' || c == '\r') {
      if (!token.empty()) tokens.push_back(token);
      token.clear();
    } else if (c != ' ' && c != '\t') {
      token += c;
    }
  }
  if (tokens.empty()) {
    const std::size_t n = std::min<std::size_t>(r.o.top, table.vocab().size());
    tokens.assign(table.vocab().words().begin(), table.vocab().words().begin() + static_cast<std::ptrdiff_t>(n));
  }
  std::string text = csv_line({"token", "x", "y"});
  for (const auto& p : project_2d(table, tokens)) {
    text += csv_line({p.token, io::format_double(p.x), io::format_double(p.y)});
  }
  r.out << text;
  if (!r.o.out.empty()) {
    OutputDir dir(r.o.out, "project2d");
    dir.write("points.csv", text);
    dir.finish(r.entry(inputs));
  }
}

FeatureSpec spec_of(const FeatureOptions& f) {
  FeatureSpec spec = parse_feature_spec(f.spec);
  spec.composition = parse_composition(f.composition);
  return spec;
}

void cmd_vectorize(const Run& r) {
  nlohmann::json inputs;
  const Corpus corpus = read_corpus(r.o.corpus, inputs);
  const FeatureSpec spec = spec_of(r.o.features);
  if (r.o.format != "csv" && r.o.format != "binary") fail(ErrorCode::Config, "--format must be csv or binary");
  OutputDir dir(r.o.out, "vectorize");
  auto resources = load_resources(spec, r.o.features, &corpus, r.o.seed, &dir);
  inputs.update(resources.inputs);
  PipelineOptions po;
  po.standardize = !r.o.features.no_standardize;
  FeaturePipeline pipeline;
  const auto m = build_features(corpus, spec, resources.view(), po, &pipeline);
  if (r.o.format == "csv") {
    dir.write("features.csv", m.to_csv());
  } else {
    save_matrix_binary(m.rows, dir.file("features.bin"));
    dir.record("features.bin");
    std::string ids;
    for (const auto& id : m.row_ids) ids += id + "\n";
    dir.write("row_ids.txt", ids);
  }
  dir.write("pipeline.json", pipeline.to_json().dump(1) + "\n");
  dir.write("resources.json", resources.description.dump(2) + "\n");
  auto e = r.entry(inputs);
  e["corpus_hash"] = io::hex64(corpus.content_hash());
  e["spec"] = spec.to_string();
  e["rows"] = m.rows.rows();
  e["cols"] = m.rows.cols();
  dir.finish(e);
  r.out << "wrote " << m.rows.rows() << "x" << m.rows.cols() << " features to " << dir.path().string() << "\n";
}

void cmd_train(const Run& r) {
  nlohmann::json inputs;
  const Corpus corpus = read_corpus(r.o.corpus, inputs);
  const FeatureSpec spec = spec_of(r.o.features);
  const LearnerConfig learner = r.o.learner.config(r.o.seed);
  if (r.o.task == "per-type" && r.o.type.empty()) fail(ErrorCode::Config, "train --task per-type needs --type");
  auto tasks = build_tasks(corpus, r.o.task, r.o.type, !r.o.no_balance, r.o.seed);
  TaskData& task = tasks.front();
  OutputDir dir(r.o.out, "train");
  auto resources = load_resources(spec, r.o.features, &task.corpus, r.o.seed, &dir);
  inputs.update(resources.inputs);
  FeaturePipeline pipeline;
  const auto features = build_features(task.corpus, spec, resources.view(), pipeline_options(r.o.features, learner),
                                       &pipeline);
  TrainedModel model = train_model(learner, features.rows, task.labels, task.label_space);
  model.pipeline = pipeline.to_json();
  model.metadata.feature_spec = spec.to_string();
  model.metadata.corpus_hash = io::hex64(task.corpus.content_hash());
  const std::string model_text = model_to_json(model).dump(1) + "\n";
  dir.write("model.json", model_text);
  dir.write("resources.json", resources.description.dump(2) + "\n");
  dir.write("train_corpus.csv", serialize_corpus(task.corpus, CorpusFormat::Csv));

  // In-sample predictions through the persisted forms, exactly as predict
  // will recompute them.
  const TrainedModel reloaded = model_from_json(nlohmann::json::parse(model_text));
  const auto x = FeaturePipeline::from_json(reloaded.pipeline)
                     .transform(tokenize_corpus(task.corpus), corpus_ids(task.corpus), resources.view());
  const auto predictions = predict(reloaded, x.rows);
  dir.write("train_predictions.csv", predictions_csv(task.corpus, task.labels, predictions, task.label_space));
  auto e = r.entry(inputs);
  e["task"] = task.name;
  e["corpus_hash"] = model.metadata.corpus_hash;
  e["spec"] = spec.to_string();
  e["learner"] = learner.to_json();
  dir.finish(e);
  r.out << "trained " << to_string(model.kind) << " on " << task.corpus.size() << " tweets (" << task.name
        << ") into " << dir.path().string() << "\n";
}

std::string folds_csv(const CvResult& cv) {
  const bool binary = cv.mean.is_binary();
  std::string text = binary ? csv_line({"repeat", "fold", "precision", "recall", "f_score", "accuracy", "specificity"})
                            : csv_line({"repeat", "fold", "micro_f_score", "macro_precision", "macro_recall",
                                        "macro_f_score", "accuracy"});
  for (const auto& f : cv.folds) {
    const auto& m = f.metrics;
    if (binary) {
      const auto& c = m.per_class.front();
      text += csv_line({std::to_string(f.repeat), std::to_string(f.fold), io::format_double(c.precision),
                        io::format_double(c.recall), io::format_double(c.f_score), io::format_double(*m.accuracy),
                        io::format_double(*m.specificity)});
    } else {
      text += csv_line({std::to_string(f.repeat), std::to_string(f.fold), io::format_double(m.micro->f_score),
                        io::format_double(m.macro->precision), io::format_double(m.macro->recall),
                        io::format_double(m.macro->f_score), io::format_double(*m.accuracy)});
    }
  }
  return text;
}

void cmd_cv(const Run& r) {
  nlohmann::json inputs;
  const Corpus corpus = read_corpus(r.o.corpus, inputs);
  const FeatureSpec spec = spec_of(r.o.features);
  const LearnerConfig learner = r.o.learner.config(r.o.seed);
  auto tasks = build_tasks(corpus, r.o.task, r.o.type, !r.o.no_balance, r.o.seed);
  OutputDir dir(r.o.out, "cv");
  // Embeddings are unsupervised and shared by all folds; TF-IDF and
  // standardization are refitted per fold.
  auto resources = load_resources(spec, r.o.features, &corpus, r.o.seed, &dir);
  inputs.update(resources.inputs);
  dir.write("resources.json", resources.description.dump(2) + "\n");
  CvOptions cvo;
  cvo.pooled = r.o.pooled;
  cvo.threads = r.o.threads;
  auto e = r.entry(inputs);
  e["spec"] = spec.to_string();
  e["learner"] = learner.to_json();
  e["corpus_hash"] = io::hex64(corpus.content_hash());
  for (const auto& task : tasks) {
    const FoldPlan plan = make_folds(task.labels, r.o.folds, r.o.repeats, r.o.seed);
    const auto cv = cross_validate(task.corpus, task.labels, task.label_space, spec, resources.view(), learner, plan,
                                   pipeline_options(r.o.features, learner), cvo);
    dir.write("report_" + task.name + ".csv", emit_report(cv.mean, ReportFormat::Csv));
    dir.write("report_" + task.name + ".md", emit_report(cv.mean, ReportFormat::Markdown));
    dir.write("folds_" + task.name + ".csv", folds_csv(cv));
    nlohmann::json fold_json = nlohmann::json::array();
    for (const auto& f : cv.folds) {
      fold_json.push_back({{"repeat", f.repeat}, {"fold", f.fold}, {"metrics", f.metrics.to_json()}});
    }
    const nlohmann::json metrics = {{"name", task.name},
                                    {"spec", spec.to_string()},
                                    {"learner", to_string(learner.kind)},
                                    {"pooled", cv.pooled},
                                    {"mean", cv.mean.to_json()},
                                    {"stddev", cv.stddev.to_json()}};
    dir.write("metrics_" + task.name + ".json", metrics.dump(2) + "\n");
    e["tasks"][task.name] = {{"corpus_hash", io::hex64(task.corpus.content_hash())},
                             {"size", task.corpus.size()},
                             {"folds", fold_json}};
    r.out << "## " << task.name << " (" << spec.to_string() << ", " << to_string(learner.kind) << ", "
          << plan.k << "x" << plan.repeats << ")\n"
          << emit_report(cv.mean, ReportFormat::Markdown) << "\n";
  }
  dir.finish(e);
}

TrainedModel read_model(const Run& r, nlohmann::json& inputs) {
  inputs[r.o.model] = file_hash(r.o.model);
  return load_model(r.o.model);
}

LoadedResources model_resources(const Run& r, const TrainedModel& model) {
  FeatureSpec spec = parse_feature_spec(model.metadata.feature_spec);
  return load_resources_file(spec, fs::path(r.o.model).parent_path() / "resources.json", r.o.features);
}

void cmd_predict(const Run& r) {
  nlohmann::json inputs;
  const TrainedModel model = read_model(r, inputs);
  const Corpus corpus = read_corpus(r.o.corpus, inputs);
  auto resources = model_resources(r, model);
  inputs.update(resources.inputs);
  if (model.pipeline.is_null()) fail(ErrorCode::MissingResource, "model carries no feature pipeline");
  const auto x = FeaturePipeline::from_json(model.pipeline)
                     .transform(tokenize_corpus(corpus), corpus_ids(corpus), resources.view());
  const auto predictions = predict(model, x.rows);
  const auto truth = task_labels(corpus, model.label_space);
  const auto text = predictions_csv(corpus, truth, predictions, model.label_space);
  OutputDir dir(r.o.out, "predict");
  dir.write("predictions.csv", text);
  dir.finish(r.entry(inputs));
  r.out << "wrote " << corpus.size() << " predictions to " << dir.path().string() << "\n";
}

void cmd_transfer(const Run& r) {
  nlohmann::json inputs;
  const TrainedModel model = read_model(r, inputs);
  const Corpus external = read_corpus(r.o.corpus, inputs);
  auto resources = model_resources(r, model);
  inputs.update(resources.inputs);
  const auto report = transfer_evaluate(model, external, resources.view());
  OutputDir dir(r.o.out, "transfer");
  dir.write("transfer_report.csv", emit_transfer_report(report, ReportFormat::Csv));
  dir.write("transfer_report.md", emit_transfer_report(report, ReportFormat::Markdown));
  Predictions p;
  p.labels = report.predicted;
  // Scores are not part of the transfer report; recompute for the file.
  const auto x = FeaturePipeline::from_json(model.pipeline)
                     .transform(tokenize_corpus(external), corpus_ids(external), resources.view());
  p = predict(model, x.rows);
  dir.write("transfer_predictions.csv",
            predictions_csv(external, task_labels(external, model.label_space), p, model.label_space));
  auto e = r.entry(inputs);
  e["metrics"] = report.metrics.to_json();
  dir.finish(e);
  r.out << emit_transfer_report(report, ReportFormat::Markdown);
}

void cmd_report(const Run& r) {
  const ReportFormat format = r.o.format == "csv" ? ReportFormat::Csv : ReportFormat::Markdown;
  if (r.o.format != "csv" && r.o.format != "markdown") fail(ErrorCode::Config, "--format must be csv or markdown");
  nlohmann::json inputs;
  std::string text;
  for (const auto& path : r.o.inputs) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(io::read_file(path));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::BadFormat, path + ": " + e.what());
    }
    inputs[path] = file_hash(path);
    const std::string name = j.value("name", fs::path(path).stem().string());
    const std::string spec = j.value("spec", "");
    const auto mean = MetricsReport::from_json(j.at("mean"));
    if (format == ReportFormat::Markdown) {
      text += "## " + name + (spec.empty() ? "" : " (" + spec + ")") + "\n\n" + emit_report(mean, format) + "\n";
    } else {
      text += "# " + name + (spec.empty() ? "" : " " + spec) + "\n" + emit_report(mean, format);
    }
  }
  r.out << text;
  if (!r.o.out.empty()) {
    OutputDir dir(r.o.out, "report");
    dir.write(format == ReportFormat::Csv ? "report.csv" : "report.md", text);
    dir.finish(r.entry(inputs));
  }
}

// ---------------------------------------------------------------------------
// Option registration

void add_features(CLI::App* s, FeatureOptions& f, bool with_spec) {
  if (with_spec) {
    s->add_option("--spec", f.spec, "Feature spec, e.g. \"F(S)+W(S)\" or \"T+L\"");
    s->add_option("--composition", f.composition, "Tweet composition of word vectors: mean or concat:<L>");
    s->add_flag("--no-standardize", f.no_standardize, "Skip per-column standardization");
  }
  s->add_option("--lexicon", f.lexicon, "Category lexicon file")->check(CLI::ExistingFile);
  s->add_option("--emb-ws", f.emb_ws, "Word-level skip-gram embeddings")->check(CLI::ExistingFile);
  s->add_option("--emb-wc", f.emb_wc, "Word-level CBOW embeddings")->check(CLI::ExistingFile);
  s->add_option("--emb-fs", f.emb_fs, "Subword skip-gram embeddings")->check(CLI::ExistingFile);
  s->add_option("--emb-fc", f.emb_fc, "Subword CBOW embeddings")->check(CLI::ExistingFile);
  s->add_option("--sentences", f.sentences, "Sentence file (one per line) for training missing embeddings")
      ->check(CLI::ExistingFile);
  s->add_option("--emb-dim", f.emb_dim, "Embedding dimension");
  s->add_option("--emb-window", f.emb_window, "Context window");
  s->add_option("--emb-min-count", f.emb_min_count, "Minimum token count");
  s->add_option("--emb-epochs", f.emb_epochs, "Training epochs");
  s->add_option("--emb-negatives", f.emb_negatives, "Negative samples per positive");
  s->add_option("--emb-buckets", f.emb_buckets, "Subword hash buckets");
  s->add_flag("--emb-add-context", f.emb_add_context, "Word level: store input + output vectors");
}

void add_learner(CLI::App* s, LearnerOptions& l) {
  s->add_option("--learner", l.learner, "nb_multinomial, nb_gaussian, knn, linear_svm or gbm");
  s->add_option("--nb-alpha", l.nb_alpha, "Multinomial NB smoothing");
  s->add_option("--knn-k", l.knn_k, "Neighbours for KNN");
  s->add_option("--knn-metric", l.knn_metric, "euclidean or cosine");
  s->add_option("--svm-lambda", l.svm_lambda, "Linear SVM regularization");
  s->add_option("--svm-epochs", l.svm_epochs, "Linear SVM passes");
  s->add_option("--trees", l.trees, "GBM boosting stages");
  s->add_option("--depth", l.depth, "GBM tree depth");
  s->add_option("--gbm-lr", l.gbm_lr, "GBM learning rate");
  s->add_option("--subsample", l.subsample, "GBM row subsample per stage");
  s->add_option("--min-samples-split", l.min_samples_split, "GBM minimum node size to split");
  s->add_option("--min-samples-leaf", l.min_samples_leaf, "GBM minimum leaf size");
}

void add_task(CLI::App* s, Options& o) {
  s->add_option("--task", o.task, "combined, per-type or multiclass");
  s->add_option("--type", o.type, "Restrict per-type runs to one type");
  s->add_flag("--no-balance", o.no_balance, "Use the corpus as is instead of balanced sampling");
}

int exit_code(ErrorClass c) {
  switch (c) {
    case ErrorClass::Config: return 2;
    case ErrorClass::Data: return 3;
    case ErrorClass::Numeric: return 4;
  }
  return 3;
}

void report_error(std::ostream& err, const std::string& code, const std::string& cls, const std::string& message) {
  err << nlohmann::json{{"error", code}, {"class", cls}, {"message", message}}.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Type-aware harassment language toolkit", "harass"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "TOML config file; [command] sections hold per-command options");
  app.require_subcommand(1, 1);

  using Handler = std::function<void(const Run&)>;
  std::map<CLI::App*, Handler> handlers;
  const auto sub = [&](const char* name, const char* help, Handler h) {
    CLI::App* s = app.add_subcommand(name, help);
    handlers[s] = std::move(h);
    return s;
  };
  const auto corpus_opt = [&](CLI::App* s, bool required) {
    auto* opt = s->add_option("--corpus", o.corpus, "Corpus file (.csv or .tsv)")->check(CLI::ExistingFile);
    if (required) opt->required();
  };
  const auto out_opt = [&](CLI::App* s, bool required) {
    auto* opt = s->add_option("--out", o.out, "Output directory");
    if (required) opt->required();
  };
  const auto seed_opt = [&](CLI::App* s) { s->add_option("--seed", o.seed, "Random seed"); };

  auto* stats = sub("stats", "Per-type annotation counts", cmd_stats);
  corpus_opt(stats, true);
  out_opt(stats, false);

  auto* kappa = sub("kappa", "Pairwise Cohen's kappa between annotators", cmd_kappa);
  corpus_opt(kappa, true);
  out_opt(kappa, false);

  auto* analyze = sub("analyze", "Lexicon effect sizes and frequent words", cmd_analyze);
  corpus_opt(analyze, true);
  out_opt(analyze, true);
  analyze->add_option("--lexicon", o.features.lexicon, "Category lexicon file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--threshold", o.threshold, "Pruning threshold on |effect size|");
  analyze->add_flag("--prune", o.prune, "Keep only features above the threshold");
  analyze->add_option("--std-mode", o.std_mode, "pooled, control or pooled-population");
  analyze->add_option("--stoplist", o.stoplist, "Stop-word file")->check(CLI::ExistingFile);
  analyze->add_option("--top", o.top, "Frequent words per sub-corpus");

  auto* freq = sub("freq", "Most frequent word tokens", cmd_freq);
  corpus_opt(freq, true);
  out_opt(freq, false);
  freq->add_option("--stoplist", o.stoplist, "Stop-word file")->check(CLI::ExistingFile);
  freq->add_option("--top", o.top, "Number of tokens");
  freq->add_option("--type", o.type, "Restrict to one type");
  freq->add_option("--label", o.label, "Restrict to harassing or nonharassing");

  auto* embed = sub("embed-train", "Train word or subword embeddings", cmd_embed_train);
  corpus_opt(embed, false);
  out_opt(embed, true);
  seed_opt(embed);
  add_features(embed, o.features, false);
  embed->add_option("--mode", o.mode, "skipgram or cbow");
  embed->add_flag("--subword", o.subword, "Train subword (character n-gram) vectors");
  embed->add_option("--minn", o.minn, "Shortest character n-gram");
  embed->add_option("--maxn", o.maxn, "Longest character n-gram");
  embed->add_option("--lr", o.emb_lr, "Initial learning rate");
  embed->add_option("--threads", o.emb_threads, "Training threads (more than one is not reproducible)");

  auto* project = sub("project2d", "PCA projection of token vectors", cmd_project2d);
  project->add_option("--embeddings", o.embeddings, "Embedding file")->required()->check(CLI::ExistingFile);
  project->add_option("--tokens", o.tokens, "Comma-separated tokens");
  project->add_option("--tokens-file", o.tokens_file, "One token per line")->check(CLI::ExistingFile);
  project->add_option("--top", o.top, "Most frequent vocabulary words when no tokens are given");
  out_opt(project, false);

  auto* vectorize = sub("vectorize", "Build a feature matrix", cmd_vectorize);
  corpus_opt(vectorize, true);
  out_opt(vectorize, true);
  seed_opt(vectorize);
  add_features(vectorize, o.features, true);
  vectorize->add_option("--format", o.format, "csv or binary");

  auto* train = sub("train", "Train a classifier", cmd_train);
  corpus_opt(train, true);
  out_opt(train, true);
  seed_opt(train);
  add_features(train, o.features, true);
  add_learner(train, o.learner);
  add_task(train, o);

  auto* cv = sub("cv", "Repeated stratified cross-validation", cmd_cv);
  corpus_opt(cv, true);
  out_opt(cv, true);
  seed_opt(cv);
  add_features(cv, o.features, true);
  add_learner(cv, o.learner);
  add_task(cv, o);
  cv->add_option("--folds", o.folds, "Folds per repeat");
  cv->add_option("--repeats", o.repeats, "Repeats with reshuffled folds");
  cv->add_option("--threads", o.threads, "Concurrent fold evaluations");
  cv->add_flag("--pooled", o.pooled, "Aggregate from pooled confusion counts");

  auto* pred = sub("predict", "Apply a saved model", cmd_predict);
  pred->add_option("--model", o.model, "model.json from train")->required()->check(CLI::ExistingFile);
  corpus_opt(pred, true);
  out_opt(pred, true);
  add_features(pred, o.features, false);

  auto* transfer = sub("transfer", "Evaluate a saved model on an external corpus", cmd_transfer);
  transfer->add_option("--model", o.model, "model.json from train")->required()->check(CLI::ExistingFile);
  corpus_opt(transfer, true);
  out_opt(transfer, true);
  add_features(transfer, o.features, false);

  auto* report = sub("report", "Render cv metrics files as tables", cmd_report);
  report->add_option("--input", o.inputs, "metrics_*.json files from cv")->required()->check(CLI::ExistingFile);
  report->add_option("--format", o.format, "csv or markdown")->default_val("markdown");
  out_opt(report, false);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    report_error(err, "Config", "config", e.what());
    return 2;
  }

  CLI::App* chosen = app.get_subcommands().front();
  try {
    handlers.at(chosen)(Run{o, chosen, out});
    return 0;
  } catch (const Error& e) {
    const ErrorClass c = classify_error(e.code());
    const char* cls = c == ErrorClass::Config ? "config" : c == ErrorClass::Numeric ? "numeric" : "data";
    report_error(err, std::string(to_string(e.code())), cls, e.what());
    return exit_code(c);
  } catch (const std::exception& e) {
    report_error(err, "Internal", "data", e.what());
    return 3;
  }
}

}  // namespace harass::cli
