#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "harass/classify.hpp"
#include "harass/corpus.hpp"
#include "harass/embeddings.hpp"
#include "harass/evaluate.hpp"
#include "harass/lexicon.hpp"
#include "harass/vectorize.hpp"

namespace harass::cli {

/// Holds <dir>/.harass.lock for its lifetime; a second writer gets a
/// Config error.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path path_;
};

/// Output directory of one command run: writes files, remembers their
/// hashes and records them in <dir>/manifest.json under the command name.
class OutputDir {
 public:
  OutputDir(std::filesystem::path dir, std::string command);

  const std::filesystem::path& path() const noexcept { return dir_; }
  std::filesystem::path file(const std::string& name) const { return dir_ / name; }
  void write(const std::string& name, const std::string& content);
  /// Records a file written by other means.
  void record(const std::string& name);
  void finish(nlohmann::json entry);

 private:
  std::filesystem::path dir_;
  std::string command_;
  DirLock lock_;
  std::map<std::string, std::string> outputs_;
};

std::string file_hash(const std::filesystem::path& path);

struct FeatureOptions {
  std::string spec = "F(S)+W(S)";
  std::string composition = "mean";
  std::string lexicon;
  std::string emb_ws, emb_wc, emb_fs, emb_fc;
  std::string sentences;
  std::size_t emb_dim = 300;
  std::size_t emb_window = 3;
  std::size_t emb_min_count = 10;
  std::size_t emb_epochs = 5;
  std::size_t emb_negatives = 5;
  bool emb_add_context = false;
  std::uint32_t emb_buckets = 2'000'000;
  bool no_standardize = false;
};

struct LearnerOptions {
  std::string learner = "gbm";
  double nb_alpha = 1.0;
  std::size_t knn_k = 5;
  std::string knn_metric = "euclidean";
  double svm_lambda = 1e-4;
  std::size_t svm_epochs = 20;
  std::size_t trees = 100;
  std::size_t depth = 3;
  double gbm_lr = 0.1;
  double subsample = 1.0;
  std::size_t min_samples_split = 2;
  std::size_t min_samples_leaf = 1;

  LearnerConfig config(std::uint64_t seed) const;
};

/// Lexicon and embedding tables backing a feature spec. Embedding blocks
/// without a supplied file are trained from the sentence file (or the
/// corpus text) and saved into the output directory.
struct LoadedResources {
  std::optional<CategoryLexicon> lexicon;
  std::map<Block, EmbeddingTable> tables;
  nlohmann::json description = nlohmann::json::object();  // resources.json content
  nlohmann::json inputs = nlohmann::json::object();

  FeatureResources view() const;
};

LoadedResources load_resources(const FeatureSpec& spec, const FeatureOptions& options, const Corpus* text_corpus,
                               std::uint64_t seed, OutputDir* out);

/// Resolves resources from a resources.json written next to a model.
LoadedResources load_resources_file(const FeatureSpec& spec, const std::filesystem::path& resources_json,
                                    const FeatureOptions& overrides);

PipelineOptions pipeline_options(const FeatureOptions& options, const LearnerConfig& learner);

struct TaskData {
  std::string name;
  Corpus corpus;
  std::vector<std::string> label_space;
  std::vector<int> labels;
};

/// task: "combined", "per-type" or "multiclass". Balanced sampling unless
/// balance is false.
std::vector<TaskData> build_tasks(const Corpus& corpus, const std::string& task, const std::string& type,
                                  bool balance, std::uint64_t seed);

Corpus read_corpus(const std::string& path, nlohmann::json& inputs);

std::string predictions_csv(const Corpus& corpus, const std::vector<int>& truth, const Predictions& predictions,
                            const std::vector<std::string>& label_space);

}  // namespace harass::cli
