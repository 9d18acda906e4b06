#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "harass/corpus.hpp"
#include "harass/matrix.hpp"
#include "harass/text.hpp"

namespace harass {

struct LexiconCategory {
  std::string name;
  std::vector<std::string> patterns;  // literal, or prefix ending in '*'
};

/// Ordered categories with LIWC-style matching: literals match exactly, a
/// trailing '*' matches any token starting with the stem.
class CategoryLexicon {
 public:
  CategoryLexicon() = default;
  /// Throws DuplicateCategory / BadPattern / ParseError.
  explicit CategoryLexicon(std::vector<LexiconCategory> categories);

  const std::vector<LexiconCategory>& categories() const noexcept { return categories_; }
  std::size_t size() const noexcept { return categories_.size(); }
  std::vector<std::string> category_names() const;

  /// Sorted, duplicate-free indices of every category matching the token.
  std::vector<std::size_t> match(std::string_view token) const;

  std::uint64_t content_hash() const;

 private:
  std::vector<LexiconCategory> categories_;
  std::unordered_map<std::string, std::vector<std::size_t>> literals_;
  std::unordered_map<std::string, std::vector<std::size_t>> prefixes_;
  std::size_t longest_prefix_ = 0;
};

CategoryLexicon parse_lexicon(std::string_view content);
CategoryLexicon load_lexicon(const std::filesystem::path& path);

/// word_count followed by one percentage (0..100) per category.
struct LiwcVector {
  std::size_t word_count = 0;
  std::vector<double> values;

  /// [word_count, values...] as one dense row.
  std::vector<double> dense() const;
};

LiwcVector liwc_vector(const CategoryLexicon& lexicon, const TokenStream& tweet);

/// Feature names matching LiwcVector::dense(): "word_count" then categories.
std::vector<std::string> liwc_feature_names(const CategoryLexicon& lexicon);

enum class StdMode {
  Pooled,            // pooled sample std (Cohen's d), default
  Control,           // sample std of the control group
  PooledPopulation,  // pooled population std
};

/// Standardized mean difference (experimental - control) / std.
/// Both groups need >= 2 values. Zero std gives 0 for equal means and
/// ZeroVariance otherwise.
double effect_size(std::span<const double> experimental, std::span<const double> control,
                   StdMode mode = StdMode::Pooled);

/// A column of the effect-size table: one type, or all types combined.
struct TypeColumn {
  std::optional<HarassmentType> type;
  std::string name() const { return type ? std::string(to_string(*type)) : "combined"; }
};

std::vector<TypeColumn> all_type_columns();  // five types + combined

struct EffectSizeTable {
  std::vector<std::string> features;
  std::vector<std::string> columns;
  Matrix values;  // features x columns

  std::string to_csv() const;
};

struct EffectSizeOptions {
  StdMode mode = StdMode::Pooled;
  bool prune = false;
  double threshold = 0.5;  // keep features with |e| > threshold somewhere
};

/// Harassing tweets are the experimental group, non-harassing the control.
/// A zero-variance cell with differing means is stored as signed infinity.
EffectSizeTable effect_size_table(const Corpus& corpus, const CategoryLexicon& lexicon,
                                  const std::vector<TypeColumn>& columns,
                                  const EffectSizeOptions& options = {});

/// Top-k word tokens by count, ties broken lexicographically.
std::vector<std::pair<std::string, std::size_t>> frequent_words(
    const Corpus& corpus, std::size_t k, const std::set<std::string>* stoplist = nullptr);

/// One lowercase token per line; blank lines and '#' lines ignored.
std::set<std::string> load_stoplist(const std::filesystem::path& path);

}  // namespace harass
