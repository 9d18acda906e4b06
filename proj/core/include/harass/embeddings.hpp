#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "harass/matrix.hpp"
#include "harass/text.hpp"

namespace harass {

enum class EmbeddingMode { SkipGram, Cbow };

std::string_view to_string(EmbeddingMode mode);
EmbeddingMode parse_embedding_mode(std::string_view text);

struct SubwordSettings {
  std::size_t n_min = 3;
  std::size_t n_max = 6;
  std::uint32_t bucket_count = 2'000'000;
};

struct EmbeddingConfig {
  std::size_t dim = 300;
  std::size_t window = 3;
  std::size_t min_count = 10;
  EmbeddingMode mode = EmbeddingMode::SkipGram;
  std::optional<SubwordSettings> subword;  // nullopt = word level
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double initial_lr = 0.025;
  std::uint64_t seed = 1;
  /// Frequent-word downsampling threshold; 0 disables it.
  double subsample = 0.0;
  /// 1 = sequential and bit-reproducible; >1 = lock-free shards.
  std::size_t threads = 1;
  /// Word level only: store input + output vector per word instead of the
  /// input vector alone.
  bool add_context_vectors = false;

  void validate() const;
};

/// Tokens with count >= min_count, ordered by descending count then
/// lexicographically.
class Vocabulary {
 public:
  Vocabulary() = default;
  Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts);

  std::size_t size() const noexcept { return words_.size(); }
  bool empty() const noexcept { return words_.empty(); }
  const std::string& word(std::size_t i) const { return words_[i]; }
  std::uint64_t count(std::size_t i) const { return counts_[i]; }
  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }
  std::optional<std::size_t> find(std::string_view word) const;
  std::uint64_t total_count() const;

 private:
  std::vector<std::string> words_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, std::size_t> index_;
};

Vocabulary build_vocab(std::span<const TokenStream> sentences, std::size_t min_count);

/// 32-bit FNV-1a over the n-gram bytes, reduced modulo bucket_count.
std::uint32_t subword_bucket(std::string_view ngram, std::uint32_t bucket_count);

class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  /// Word-level table.
  EmbeddingTable(EmbeddingConfig config, Vocabulary vocab, Matrix vectors);
  /// Subword table; bucket_ids[i] names the bucket stored in row i.
  EmbeddingTable(EmbeddingConfig config, Vocabulary vocab, std::vector<std::uint32_t> bucket_ids,
                 Matrix bucket_vectors);

  const EmbeddingConfig& config() const noexcept { return config_; }
  const Vocabulary& vocab() const noexcept { return vocab_; }
  std::size_t dim() const noexcept { return config_.dim; }
  bool is_subword() const noexcept { return config_.subword.has_value(); }

  /// Vocabulary vectors (composed from buckets at subword level).
  const Matrix& input_vectors() const noexcept { return vectors_; }

  /// Word level: stored row or nullopt. Subword level: mean of the token's
  /// n-gram buckets; buckets never touched in training keep their seeded
  /// initial value, so every token resolves.
  std::optional<std::vector<double>> word_vector(std::string_view token) const;

  const std::vector<std::uint32_t>& bucket_ids() const noexcept { return bucket_ids_; }
  const Matrix& bucket_vectors() const noexcept { return bucket_vectors_; }

  /// Text file in word2vec format; subword tables also write "<path>.bkt".
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const EmbeddingTable& a, const EmbeddingTable& b) {
    return a.vocab_.words() == b.vocab_.words() && a.vectors_ == b.vectors_ &&
           a.bucket_ids_ == b.bucket_ids_ && a.bucket_vectors_ == b.bucket_vectors_;
  }

 private:
  void compose_vocab_vectors();
  void bucket_vector_into(std::uint32_t bucket, std::span<double> acc) const;

  EmbeddingConfig config_;
  Vocabulary vocab_;
  Matrix vectors_;
  std::vector<std::uint32_t> bucket_ids_;
  std::unordered_map<std::uint32_t, std::size_t> bucket_rows_;
  Matrix bucket_vectors_;
};

EmbeddingTable load_embeddings(const std::filesystem::path& path);

/// Seeded initial value of a subword bucket row: uniform in
/// [-1/dim, 1/dim].
void initial_bucket_vector(std::uint64_t seed, std::uint32_t bucket, std::span<double> out);

struct TrainingReport {
  /// Mean negative-sampling loss on a fixed probe batch; entry 0 is before
  /// training, entry e after epoch e.
  std::vector<double> probe_losses;
  std::uint64_t processed_tokens = 0;
};

/// Throws EmptyVocabulary when nothing survives min_count.
EmbeddingTable train_embeddings(std::span<const TokenStream> sentences,
                                const EmbeddingConfig& config, TrainingReport* report = nullptr);

/// Negative-sampling loss for one predictor vector: target row 0 is the
/// positive, the rest are negatives.
///   -log s(u_0 . h) - sum_k log s(-u_k . h)
double negative_sampling_loss(std::span<const double> hidden, const Matrix& targets);

/// Same loss; writes d/dh into grad_hidden and d/du_k into row k of
/// grad_targets (resized to match targets).
double negative_sampling_gradient(std::span<const double> hidden, const Matrix& targets,
                                  std::span<double> grad_hidden, Matrix& grad_targets);

struct Composition {
  enum class Kind { Mean, ConcatPad };
  Kind kind = Kind::Mean;
  std::size_t length = 30;  // ConcatPad only

  std::string to_string() const;
  friend bool operator==(const Composition&, const Composition&) = default;
};

/// "mean" or "concat:<L>" (also "concat" for L = 30).
Composition parse_composition(std::string_view text);

std::size_t composed_width(const EmbeddingTable& table, const Composition& composition);

/// Mean of resolvable token vectors (zero if none), or the first L token
/// vectors concatenated and zero-padded, with unresolved tokens as zeros.
std::vector<double> compose_tweet(const EmbeddingTable& table, const TokenStream& tweet,
                                  const Composition& composition);

struct Point2d {
  std::string token;
  double x = 0.0;
  double y = 0.0;
};

/// Centered PCA onto the top two principal components. Unresolvable tokens
/// are skipped; fewer than two resolvable tokens raises TooFewPoints.
std::vector<Point2d> project_2d(const EmbeddingTable& table, std::span<const std::string> tokens);

/// PCA of raw rows; exposed for direct use and testing.
std::vector<std::pair<double, double>> pca_2d(const Matrix& points);

}  // namespace harass
