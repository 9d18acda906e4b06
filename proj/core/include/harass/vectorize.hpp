#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "harass/corpus.hpp"
#include "harass/embeddings.hpp"
#include "harass/lexicon.hpp"
#include "harass/matrix.hpp"
#include "harass/text.hpp"

namespace harass {

// ---------------------------------------------------------------------------
// TF-IDF

enum class TfidfNorm { L2, None };

struct SparseVector {
  std::vector<std::pair<std::size_t, double>> entries;  // ascending index

  double norm() const;
};

class TfidfModel {
 public:
  TfidfModel() = default;
  TfidfModel(std::vector<std::string> vocabulary, std::vector<double> idf, TfidfNorm norm,
             std::string fitted_on = {});

  std::size_t size() const noexcept { return vocabulary_.size(); }
  const std::vector<std::string>& vocabulary() const noexcept { return vocabulary_; }
  const std::vector<double>& idf() const noexcept { return idf_; }
  TfidfNorm norm() const noexcept { return norm_; }
  const std::string& fitted_on() const noexcept { return fitted_on_; }
  std::optional<std::size_t> column(std::string_view token) const;

  /// count(t) * idf(t) over in-vocabulary word tokens, L2-normalized when
  /// norm is L2. Out-of-vocabulary tokens are ignored.
  SparseVector transform(const TokenStream& tweet) const;

  nlohmann::json to_json() const;
  static TfidfModel from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> vocabulary_;
  std::vector<double> idf_;
  TfidfNorm norm_ = TfidfNorm::L2;
  std::string fitted_on_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// idf(t) = ln((1 + N) / (1 + df(t))) + 1. Columns ordered by descending df,
/// then lexicographically. Throws EmptyCorpus.
TfidfModel fit_tfidf(std::span<const TokenStream> documents, TfidfNorm norm = TfidfNorm::L2,
                     std::string fitted_on = {});
TfidfModel fit_tfidf(const Corpus& corpus, TfidfNorm norm = TfidfNorm::L2);

// ---------------------------------------------------------------------------
// Feature specs

/// Feature blocks: TF-IDF, lexicon vector, word2vec skip-gram/CBOW and
/// subword skip-gram/CBOW embeddings.
enum class Block { T, L, WS, WC, FS, FC };

std::string_view to_string(Block block);
bool is_embedding_block(Block block);

struct FeatureSpec {
  std::vector<Block> blocks;
  Composition composition;  // applied to every embedding block

  bool contains(Block b) const;
  /// "+"-joined block names, e.g. "F(S)+W(S)".
  std::string to_string() const;
  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Parses "F(S)+L+T"-style specs; whitespace-tolerant, case-sensitive.
/// Throws UnknownBlock / DuplicateBlock / EmptySpec.
FeatureSpec parse_feature_spec(std::string_view text);

// ---------------------------------------------------------------------------
// Feature matrices

struct BlockRange {
  Block block;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t width() const { return end - begin; }
  friend bool operator==(const BlockRange&, const BlockRange&) = default;
};

struct FeatureMatrix {
  Matrix rows;
  std::vector<std::string> row_ids;
  FeatureSpec spec;
  std::vector<BlockRange> block_offsets;
  std::vector<std::string> column_labels;  // "<block>.<column>"

  std::string to_csv() const;
};

/// Binary layout: 8-byte magic "HRSFMAT1", u32 version, u32 reserved,
/// u64 rows, u64 cols, then rows*cols little-endian float64, row-major.
void save_matrix_binary(const Matrix& m, const std::filesystem::path& path);
Matrix load_matrix_binary(const std::filesystem::path& path);

/// Inputs the blocks are computed from. Pointers are non-owning.
struct FeatureResources {
  const TfidfModel* tfidf = nullptr;  // fitted on the fitting corpus when absent
  const CategoryLexicon* lexicon = nullptr;
  std::map<Block, const EmbeddingTable*> embeddings;
};

struct PipelineOptions {
  bool standardize = true;
  TfidfNorm tfidf_norm = TfidfNorm::L2;
};

/// Fitted feature transform: TF-IDF model (T) and per-column
/// standardization parameters, learned from a fitting corpus and reused
/// unchanged on any later input.
class FeaturePipeline {
 public:
  FeaturePipeline() = default;

  static FeaturePipeline fit(std::span<const TokenStream> documents, const FeatureSpec& spec,
                             const FeatureResources& resources, PipelineOptions options = {});

  FeatureMatrix transform(std::span<const TokenStream> documents, std::span<const std::string> ids,
                          const FeatureResources& resources) const;

  const FeatureSpec& spec() const noexcept { return spec_; }
  std::size_t width() const noexcept { return mean_.size(); }
  const std::optional<TfidfModel>& tfidf() const noexcept { return tfidf_; }
  const std::vector<double>& column_means() const noexcept { return mean_; }
  const std::vector<double>& column_scales() const noexcept { return scale_; }
  const PipelineOptions& options() const noexcept { return options_; }

  nlohmann::json to_json() const;
  static FeaturePipeline from_json(const nlohmann::json& j);

 private:
  // Unstandardized block layout for the given documents.
  Matrix raw_features(std::span<const TokenStream> documents, const FeatureResources& resources) const;
  void layout(const FeatureResources& resources);

  FeatureSpec spec_;
  PipelineOptions options_;
  std::optional<TfidfModel> tfidf_;
  std::vector<BlockRange> blocks_;
  std::vector<std::string> labels_;
  std::vector<double> mean_;
  std::vector<double> scale_;  // 0 marks a constant column
};

std::vector<TokenStream> tokenize_corpus(const Corpus& corpus);
std::vector<std::string> corpus_ids(const Corpus& corpus);

/// Fits a pipeline on the corpus and returns its rows. The fitted pipeline
/// is written to *fitted when given.
FeatureMatrix build_features(const Corpus& corpus, const FeatureSpec& spec,
                             const FeatureResources& resources, PipelineOptions options = {},
                             FeaturePipeline* fitted = nullptr);

}  // namespace harass
