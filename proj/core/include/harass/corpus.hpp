#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "harass/error.hpp"

namespace harass {

/// The five contextual harassment types. Integer codes are stable.
enum class HarassmentType : int { Sexual = 0, Racial = 1, Appearance = 2, Intellectual = 3, Political = 4 };

inline constexpr std::array<HarassmentType, 5> kAllTypes = {
    HarassmentType::Sexual, HarassmentType::Racial, HarassmentType::Appearance,
    HarassmentType::Intellectual, HarassmentType::Political};

enum class Label : int { NonHarassing = 0, Harassing = 1 };
enum class AnnotationVote { Yes, No, Other };
enum class Consensus { Harassing, NonHarassing, Undecidable };

std::string_view to_string(HarassmentType type);
std::string_view to_string(Label label);
std::string_view to_string(AnnotationVote vote);
std::string_view to_string(Consensus consensus);

/// Accepts the canonical names plus "appearance-related"; case-insensitive.
HarassmentType parse_type(std::string_view text);
Label parse_label(std::string_view text);
AnnotationVote parse_vote(std::string_view text);
/// Pipe-joined votes, e.g. "yes|yes|no".
std::vector<AnnotationVote> parse_votes(std::string_view text);
std::string format_votes(std::span<const AnnotationVote> votes);

struct LabeledTweet {
  std::string id;
  std::string text;
  HarassmentType type = HarassmentType::Sexual;
  Label label = Label::NonHarassing;
  std::optional<std::vector<AnnotationVote>> votes;

  friend bool operator==(const LabeledTweet&, const LabeledTweet&) = default;
};

struct Provenance {
  std::string source;
  std::string loaded_at;  // ISO-8601 UTC, empty for in-memory corpora
};

/// Insertion-ordered tweets with unique ids.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(Provenance provenance) : provenance_(std::move(provenance)) {}

  /// Throws DuplicateId / EmptyText.
  void add(LabeledTweet tweet);

  const std::vector<LabeledTweet>& tweets() const noexcept { return tweets_; }
  std::size_t size() const noexcept { return tweets_.size(); }
  bool empty() const noexcept { return tweets_.empty(); }
  const LabeledTweet& operator[](std::size_t i) const { return tweets_[i]; }
  auto begin() const { return tweets_.begin(); }
  auto end() const { return tweets_.end(); }

  const Provenance& provenance() const noexcept { return provenance_; }
  void set_provenance(Provenance p) { provenance_ = std::move(p); }

  /// Order-sensitive content hash (ids, text, type, label, votes).
  std::uint64_t content_hash() const;

  /// Sub-corpus of the given rows, in the given order.
  Corpus subset(std::span<const std::size_t> indices) const;

  bool same_content(const Corpus& other) const { return tweets_ == other.tweets_; }

 private:
  std::vector<LabeledTweet> tweets_;
  std::unordered_map<std::string, std::size_t> index_;
  Provenance provenance_;
};

enum class CorpusFormat { Csv, Tsv };

/// Picks Tsv for ".tsv"/".tab", Csv otherwise.
CorpusFormat format_for_path(const std::filesystem::path& path);

/// Header must name id, text, type, label; votes is optional. Rows whose
/// votes have no two-vote consensus are dropped.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format);
Corpus parse_corpus(std::string_view content, CorpusFormat format, std::string source = {});
void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format);
std::string serialize_corpus(const Corpus& corpus, CorpusFormat format);

/// >= 2 Yes -> Harassing, >= 2 No -> NonHarassing, otherwise (or if both
/// reach two) Undecidable.
Consensus consensus_label(std::span<const AnnotationVote> votes);

/// Cohen's kappa over two raters' categorical labels.
template <typename T>
double cohen_kappa(std::span<const T> a, std::span<const T> b) {
  if (a.size() != b.size()) fail(ErrorCode::LengthMismatch, "rater lists differ in length");
  if (a.empty()) fail(ErrorCode::InvalidArgument, "cohen_kappa needs at least one item");
  const double n = static_cast<double>(a.size());
  std::map<T, std::pair<double, double>> marginals;
  double agree = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    marginals[a[i]].first += 1.0;
    marginals[b[i]].second += 1.0;
    if (a[i] == b[i]) agree += 1.0;
  }
  const double p_o = agree / n;
  double p_e = 0.0;
  for (const auto& [label, counts] : marginals) p_e += (counts.first / n) * (counts.second / n);
  if (p_e >= 1.0) return p_o >= 1.0 ? 1.0 : 0.0;
  return (p_o - p_e) / (1.0 - p_e);
}

/// Tweets matching type and/or label; nullopt matches anything.
Corpus filter_corpus(const Corpus& corpus, std::optional<HarassmentType> type,
                     std::optional<Label> label);

inline Corpus filter_by_type(const Corpus& corpus, HarassmentType type,
                             std::optional<Label> label = std::nullopt) {
  return filter_corpus(corpus, type, label);
}

/// All minority-class tweets plus an equal-size seeded sample (without
/// replacement) of the majority class, kept in corpus order.
Corpus balanced_undersample(const Corpus& corpus, std::uint64_t seed);

/// Per-repeat fold assignment: assignments[r][i] is the fold of item i.
struct FoldPlan {
  std::size_t k = 0;
  std::size_t repeats = 0;
  std::uint64_t seed = 0;
  std::vector<std::vector<std::size_t>> assignments;

  std::size_t size() const { return assignments.empty() ? 0 : assignments.front().size(); }
  std::vector<std::size_t> train_indices(std::size_t repeat, std::size_t fold) const;
  std::vector<std::size_t> test_indices(std::size_t repeat, std::size_t fold) const;

  friend bool operator==(const FoldPlan&, const FoldPlan&) = default;
};

/// Stratified k-fold plan over arbitrary integer strata.
FoldPlan make_folds(std::span<const int> strata, std::size_t k, std::size_t repeats,
                    std::uint64_t seed);

/// Stratified by binary label.
FoldPlan make_folds(const Corpus& corpus, std::size_t k, std::size_t repeats, std::uint64_t seed);

struct TypeCounts {
  std::size_t annotated = 0;
  std::size_t harassing = 0;
  std::size_t non_harassing = 0;
};

/// Per-type annotated/harassing/non-harassing counts plus the combined row.
struct CorpusStats {
  std::array<TypeCounts, 5> per_type{};
  TypeCounts combined;
};

CorpusStats corpus_stats(const Corpus& corpus);

}  // namespace harass
