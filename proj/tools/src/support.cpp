#include "support.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "harass/error.hpp"
#include "harass/io.hpp"
#include "harass/random.hpp"
#include "harass/text.hpp"

namespace harass::cli {

namespace fs = std::filesystem;

DirLock::DirLock(const fs::path& dir) : path_(dir / ".harass.lock") {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    fail(ErrorCode::Config, "output directory " + dir.string() + " is locked by another run (" + path_.string() + ")");
  }
  ::close(fd);
}

DirLock::~DirLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

namespace {

fs::path prepare_dir(const fs::path& dir) {
  if (dir.empty()) fail(ErrorCode::Config, "--out is required");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

}  // namespace

OutputDir::OutputDir(fs::path dir, std::string command)
    : dir_(prepare_dir(dir)), command_(std::move(command)), lock_(dir_) {}

std::string file_hash(const fs::path& path) { return io::hex64(io::fnv1a64(io::read_file(path))); }

void OutputDir::write(const std::string& name, const std::string& content) {
  io::write_file(file(name), content);
  outputs_[name] = io::hex64(io::fnv1a64(content));
}

void OutputDir::record(const std::string& name) { outputs_[name] = file_hash(file(name)); }

void OutputDir::finish(nlohmann::json entry) {
  const fs::path manifest = file("manifest.json");
  nlohmann::json doc = {{"format", "harass-manifest"}, {"version", 1}, {"runs", nlohmann::json::object()}};
  if (fs::exists(manifest)) {
    try {
      auto existing = nlohmann::json::parse(io::read_file(manifest));
      if (existing.value("format", "") == "harass-manifest") doc = std::move(existing);
    } catch (const nlohmann::json::exception&) {
      // Unreadable manifests are replaced.
    }
  }
  entry["outputs"] = outputs_;
  doc["runs"][command_] = std::move(entry);
  io::write_file(manifest, doc.dump(2) + "\n");
}

LearnerConfig LearnerOptions::config(std::uint64_t seed) const {
  LearnerConfig c;
  c.kind = parse_learner_kind(learner);
  c.nb_alpha = nb_alpha;
  c.knn_k = knn_k;
  c.knn_metric = parse_knn_metric(knn_metric);
  c.svm_lambda = svm_lambda;
  c.svm_epochs = svm_epochs;
  c.gbm.n_trees = trees;
  c.gbm.max_depth = depth;
  c.gbm.learning_rate = gbm_lr;
  c.gbm.subsample = subsample;
  c.gbm.min_samples_split = min_samples_split;
  c.gbm.min_samples_leaf = min_samples_leaf;
  c.gbm.seed = seed;
  c.gbm.validate();
  c.seed = seed;
  return c;
}

FeatureResources LoadedResources::view() const {
  FeatureResources r;
  if (lexicon) r.lexicon = &*lexicon;
  for (const auto& [block, table] : tables) r.embeddings[block] = &table;
  return r;
}

namespace {

template <typename Options>
auto& block_path(Options& o, Block b) {
  switch (b) {
    case Block::WS: return o.emb_ws;
    case Block::WC: return o.emb_wc;
    case Block::FS: return o.emb_fs;
    default: return o.emb_fc;
  }
}

std::string block_file(Block b) {
  switch (b) {
    case Block::WS: return "emb_ws.vec";
    case Block::WC: return "emb_wc.vec";
    case Block::FS: return "emb_fs.vec";
    default: return "emb_fc.vec";
  }
}

std::vector<TokenStream> sentence_tokens(const FeatureOptions& o, const Corpus* corpus, nlohmann::json& inputs) {
  std::vector<TokenStream> out;
  if (!o.sentences.empty()) {
    const std::string content = io::read_file(o.sentences);
    inputs[o.sentences] = io::hex64(io::fnv1a64(content));
    std::istringstream in(content);
    std::string line;
    while (std::getline(in, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.push_back(tokenize(line));
    }
  } else if (corpus) {
    out = tokenize_corpus(*corpus);
  }
  if (out.empty()) fail(ErrorCode::MissingResource, "no sentences to train embeddings from");
  return out;
}

}  // namespace

LoadedResources load_resources(const FeatureSpec& spec, const FeatureOptions& options, const Corpus* text_corpus,
                               std::uint64_t seed, OutputDir* out) {
  LoadedResources r;
  if (spec.contains(Block::L)) {
    if (options.lexicon.empty()) fail(ErrorCode::MissingResource, "block L needs --lexicon");
    r.lexicon = load_lexicon(options.lexicon);
    r.inputs[options.lexicon] = file_hash(options.lexicon);
    r.description["lexicon"] = fs::absolute(options.lexicon).lexically_normal().string();
  }
  std::optional<std::vector<TokenStream>> sentences;
  for (Block b : spec.blocks) {
    if (!is_embedding_block(b)) continue;
    const std::string& path = block_path(options, b);
    const std::string key(to_string(b));
    if (!path.empty()) {
      r.tables.emplace(b, load_embeddings(path));
      r.inputs[path] = file_hash(path);
      r.description["embeddings"][key] = fs::absolute(path).lexically_normal().string();
      continue;
    }
    if (!sentences) sentences = sentence_tokens(options, text_corpus, r.inputs);
    EmbeddingConfig config;
    config.dim = options.emb_dim;
    config.window = options.emb_window;
    config.min_count = options.emb_min_count;
    config.epochs = options.emb_epochs;
    config.negatives = options.emb_negatives;
    config.mode = (b == Block::WS || b == Block::FS) ? EmbeddingMode::SkipGram : EmbeddingMode::Cbow;
    if (b == Block::FS || b == Block::FC) {
      SubwordSettings s;
      s.bucket_count = options.emb_buckets;
      config.subword = s;
    } else {
      config.add_context_vectors = options.emb_add_context;
    }
    config.seed = seed;
    auto table = train_embeddings(*sentences, config);
    if (out) {
      table.save(out->file(block_file(b)));
      out->record(block_file(b));
      if (table.is_subword()) out->record(block_file(b) + ".bkt");
      r.description["embeddings"][key] = block_file(b);
    }
    r.tables.emplace(b, std::move(table));
  }
  return r;
}

LoadedResources load_resources_file(const FeatureSpec& spec, const fs::path& resources_json,
                                    const FeatureOptions& overrides) {
  nlohmann::json desc = nlohmann::json::object();
  if (fs::exists(resources_json)) {
    try {
      desc = nlohmann::json::parse(io::read_file(resources_json));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::BadFormat, resources_json.string() + ": " + e.what());
    }
  }
  const fs::path base = resources_json.parent_path();
  const auto resolve = [&](const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  FeatureOptions o = overrides;
  if (o.lexicon.empty() && desc.contains("lexicon")) o.lexicon = resolve(desc["lexicon"].get<std::string>()).string();
  for (Block b : {Block::WS, Block::WC, Block::FS, Block::FC}) {
    const std::string key(to_string(b));
    std::string& slot = block_path(o, b);
    if (slot.empty() && desc.contains("embeddings") && desc["embeddings"].contains(key)) {
      slot = resolve(desc["embeddings"][key].get<std::string>()).string();
    }
    if (spec.contains(b) && slot.empty()) {
      fail(ErrorCode::MissingResource, "no embedding file for block " + key + "; pass it explicitly");
    }
  }
  o.sentences.clear();
  return load_resources(spec, o, nullptr, 0, nullptr);
}

PipelineOptions pipeline_options(const FeatureOptions& options, const LearnerConfig& learner) {
  PipelineOptions p;
  // Multinomial NB needs the raw non-negative counts.
  p.standardize = !options.no_standardize && learner.kind != LearnerKind::NbMultinomial;
  return p;
}

namespace {

std::vector<int> binary_labels(const Corpus& c) { return task_labels(c, binary_label_space()); }

}  // namespace

std::vector<TaskData> build_tasks(const Corpus& corpus, const std::string& task, const std::string& type,
                                  bool balance, std::uint64_t seed) {
  std::vector<TaskData> out;
  if (task == "combined") {
    Corpus c = balance ? balanced_undersample(corpus, Rng::mix(seed ^ 0x636f6d62ULL)) : corpus;
    auto labels = binary_labels(c);
    out.push_back({"combined", std::move(c), binary_label_space(), std::move(labels)});
  } else if (task == "per-type") {
    for (auto t : kAllTypes) {
      if (!type.empty() && parse_type(type) != t) continue;
      Corpus c = filter_by_type(corpus, t);
      if (balance) c = balanced_undersample(c, Rng::mix(seed ^ static_cast<std::uint64_t>(t)));
      auto labels = binary_labels(c);
      out.push_back({std::string(to_string(t)), std::move(c), binary_label_space(), std::move(labels)});
    }
  } else if (task == "multiclass") {
    std::vector<std::size_t> harassing, other;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      (corpus[i].label == Label::Harassing ? harassing : other).push_back(i);
    }
    std::vector<std::size_t> keep = harassing;
    if (balance) {
      // Non-harassing class sampled to the mean size of the five type classes.
      const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(harassing.size()) / 5.0));
      Rng rng(Rng::mix(seed ^ 0x6d756c74ULL));
      const std::size_t take = std::min(target, other.size());
      for (std::size_t i = 0; i < take; ++i) std::swap(other[i], other[i + rng.uniform_index(other.size() - i)]);
      other.resize(take);
    }
    keep.insert(keep.end(), other.begin(), other.end());
    std::sort(keep.begin(), keep.end());
    Corpus c = corpus.subset(keep);
    auto labels = task_labels(c, multiclass_label_space());
    out.push_back({"multiclass", std::move(c), multiclass_label_space(), std::move(labels)});
  } else {
    fail(ErrorCode::Config, "unknown task '" + task + "' (combined, per-type, multiclass)");
  }
  for (const auto& t : out) {
    if (t.corpus.empty()) fail(ErrorCode::EmptyCorpus, "task " + t.name + " has no tweets");
  }
  return out;
}

Corpus read_corpus(const std::string& path, nlohmann::json& inputs) {
  Corpus c = load_corpus(path, format_for_path(path));
  inputs[path] = file_hash(path);
  return c;
}

std::string predictions_csv(const Corpus& corpus, const std::vector<int>& truth, const Predictions& predictions,
                            const std::vector<std::string>& label_space) {
  std::ostringstream out;
  std::vector<std::string> header = {"id", "truth", "predicted"};
  for (const auto& l : label_space) header.push_back("score_" + l);
  io::write_record(out, header, ',');
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    std::vector<std::string> row = {corpus[i].id, label_space[static_cast<std::size_t>(truth[i])],
                                    label_space[static_cast<std::size_t>(predictions.labels[i])]};
    for (double s : predictions.scores.row(i)) row.push_back(io::format_double(s));
    io::write_record(out, row, ',');
  }
  return out.str();
}

}  // namespace harass::cli
