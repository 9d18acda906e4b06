#include "harass/lexicon.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "harass/error.hpp"
#include "harass/io.hpp"

namespace harass {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

void validate_pattern(const std::string& p) {
  const auto star = p.find('*');
  const bool bad = p.empty() || p == "*" || (star != std::string::npos && star != p.size() - 1) ||
                   std::any_of(p.begin(), p.end(), [](unsigned char c) { return std::isspace(c); });
  if (bad) fail(ErrorCode::BadPattern, "'" + p + "'");
}

}  // namespace

CategoryLexicon::CategoryLexicon(std::vector<LexiconCategory> categories)
    : categories_(std::move(categories)) {
  std::set<std::string> seen;
  for (std::size_t c = 0; c < categories_.size(); ++c) {
    auto& cat = categories_[c];
    if (!seen.insert(cat.name).second) fail(ErrorCode::DuplicateCategory, "'" + cat.name + "'");
    if (cat.patterns.empty()) fail(ErrorCode::ParseError, "category '" + cat.name + "' has no patterns");
    for (auto& p : cat.patterns) {
      p = ascii_lower(p);
      validate_pattern(p);
      if (p.back() == '*') {
        std::string stem = p.substr(0, p.size() - 1);
        longest_prefix_ = std::max(longest_prefix_, stem.size());
        auto& bucket = prefixes_[std::move(stem)];
        if (bucket.empty() || bucket.back() != c) bucket.push_back(c);
      } else {
        auto& bucket = literals_[p];
        if (bucket.empty() || bucket.back() != c) bucket.push_back(c);
      }
    }
  }
}

std::vector<std::string> CategoryLexicon::category_names() const {
  std::vector<std::string> names;
  for (const auto& c : categories_) names.push_back(c.name);
  return names;
}

std::vector<std::size_t> CategoryLexicon::match(std::string_view token) const {
  std::vector<std::size_t> hits;
  if (auto it = literals_.find(std::string(token)); it != literals_.end()) {
    hits.insert(hits.end(), it->second.begin(), it->second.end());
  }
  const std::size_t limit = std::min(longest_prefix_, token.size());
  std::string stem;
  for (std::size_t len = 1; len <= limit; ++len) {
    stem.assign(token.substr(0, len));
    if (auto it = prefixes_.find(stem); it != prefixes_.end()) {
      hits.insert(hits.end(), it->second.begin(), it->second.end());
    }
  }
  std::sort(hits.begin(), hits.end());
  hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
  return hits;
}

std::uint64_t CategoryLexicon::content_hash() const {
  std::uint64_t h = io::fnv1a64("lexicon/v1");
  for (const auto& c : categories_) {
    h = io::fnv1a64("[" + c.name + "]", h);
    for (const auto& p : c.patterns) h = io::fnv1a64(p + "\n", h);
  }
  return h;
}

CategoryLexicon parse_lexicon(std::string_view content) {
  std::vector<LexiconCategory> categories;
  std::size_t line_no = 0;
  std::size_t header_line = 0;
  std::istringstream in{std::string(content)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad section header");
      }
      if (!categories.empty() && categories.back().patterns.empty()) {
        fail(ErrorCode::ParseError, "line " + std::to_string(header_line) + ": empty category");
      }
      const auto name = trim(line.substr(1, line.size() - 2));
      for (const auto& c : categories) {
        if (c.name == name) fail(ErrorCode::DuplicateCategory, "'" + std::string(name) + "'");
      }
      categories.push_back({std::string(name), {}});
      header_line = line_no;
      continue;
    }
    if (categories.empty()) {
      fail(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": pattern before any [category]");
    }
    std::string pattern = ascii_lower(line);
    validate_pattern(pattern);
    categories.back().patterns.push_back(std::move(pattern));
  }
  if (!categories.empty() && categories.back().patterns.empty()) {
    fail(ErrorCode::ParseError, "line " + std::to_string(header_line) + ": empty category");
  }
  return CategoryLexicon(std::move(categories));
}

CategoryLexicon load_lexicon(const std::filesystem::path& path) {
  return parse_lexicon(io::read_file(path));
}

std::vector<double> LiwcVector::dense() const {
  std::vector<double> row;
  row.reserve(values.size() + 1);
  row.push_back(static_cast<double>(word_count));
  row.insert(row.end(), values.begin(), values.end());
  return row;
}

LiwcVector liwc_vector(const CategoryLexicon& lexicon, const TokenStream& tweet) {
  LiwcVector v;
  v.values.assign(lexicon.size(), 0.0);
  std::vector<std::size_t> hits(lexicon.size(), 0);
  for (const auto& token : tweet.tokens) {
    if (!counts_as_word(token.kind)) continue;
    ++v.word_count;
    for (std::size_t c : lexicon.match(token.surface)) ++hits[c];
  }
  if (v.word_count == 0) return v;
  for (std::size_t c = 0; c < hits.size(); ++c) {
    v.values[c] = 100.0 * static_cast<double>(hits[c]) / static_cast<double>(v.word_count);
  }
  return v;
}

std::vector<std::string> liwc_feature_names(const CategoryLexicon& lexicon) {
  std::vector<std::string> names = {"word_count"};
  for (const auto& c : lexicon.categories()) names.push_back(c.name);
  return names;
}

namespace {

struct Moments {
  double mean = 0.0;
  double ss = 0.0;  // sum of squared deviations
};

Moments moments(std::span<const double> xs) {
  Moments m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  for (double x : xs) m.ss += (x - m.mean) * (x - m.mean);
  return m;
}

}  // namespace

double effect_size(std::span<const double> experimental, std::span<const double> control,
                   StdMode mode) {
  if (experimental.size() < 2 || control.size() < 2) {
    fail(ErrorCode::InvalidArgument, "effect_size needs at least two values per group");
  }
  const Moments e = moments(experimental);
  const Moments c = moments(control);
  const double n1 = static_cast<double>(experimental.size());
  const double n2 = static_cast<double>(control.size());
  double sd = 0.0;
  switch (mode) {
    case StdMode::Pooled: sd = std::sqrt((e.ss + c.ss) / (n1 + n2 - 2.0)); break;
    case StdMode::Control: sd = std::sqrt(c.ss / (n2 - 1.0)); break;
    case StdMode::PooledPopulation: sd = std::sqrt((e.ss + c.ss) / (n1 + n2)); break;
  }
  const double diff = e.mean - c.mean;
  if (sd == 0.0) {
    if (diff == 0.0) return 0.0;
    fail(ErrorCode::ZeroVariance, "groups have zero spread but different means");
  }
  return diff / sd;
}

std::vector<TypeColumn> all_type_columns() {
  std::vector<TypeColumn> cols;
  for (auto t : kAllTypes) cols.push_back({t});
  cols.push_back({std::nullopt});
  return cols;
}

std::string EffectSizeTable::to_csv() const {
  std::ostringstream out;
  std::vector<std::string> header = {"feature"};
  header.insert(header.end(), columns.begin(), columns.end());
  io::write_record(out, header, ',');
  for (std::size_t f = 0; f < features.size(); ++f) {
    std::vector<std::string> row = {features[f]};
    for (std::size_t c = 0; c < columns.size(); ++c) row.push_back(io::format_double(values(f, c)));
    io::write_record(out, row, ',');
  }
  return out.str();
}

EffectSizeTable effect_size_table(const Corpus& corpus, const CategoryLexicon& lexicon,
                                  const std::vector<TypeColumn>& columns,
                                  const EffectSizeOptions& options) {
  // Per-tweet LIWC rows computed once.
  std::vector<std::vector<double>> rows;
  rows.reserve(corpus.size());
  for (const auto& t : corpus) rows.push_back(liwc_vector(lexicon, tokenize(t.text)).dense());

  const auto names = liwc_feature_names(lexicon);
  Matrix values(names.size(), columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    std::vector<std::size_t> exp_rows, ctl_rows;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      if (columns[c].type && corpus[i].type != *columns[c].type) continue;
      (corpus[i].label == Label::Harassing ? exp_rows : ctl_rows).push_back(i);
    }
    if (exp_rows.size() < 2) fail(ErrorCode::EmptyGroup, columns[c].name() + "/harassing");
    if (ctl_rows.size() < 2) fail(ErrorCode::EmptyGroup, columns[c].name() + "/nonharassing");
    std::vector<double> exp(exp_rows.size()), ctl(ctl_rows.size());
    for (std::size_t f = 0; f < names.size(); ++f) {
      for (std::size_t i = 0; i < exp_rows.size(); ++i) exp[i] = rows[exp_rows[i]][f];
      for (std::size_t i = 0; i < ctl_rows.size(); ++i) ctl[i] = rows[ctl_rows[i]][f];
      try {
        values(f, c) = effect_size(exp, ctl, options.mode);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ZeroVariance) throw;
        const double diff = moments(exp).mean - moments(ctl).mean;
        values(f, c) = std::copysign(std::numeric_limits<double>::infinity(), diff);
      }
    }
  }

  EffectSizeTable table;
  for (const auto& col : columns) table.columns.push_back(col.name());
  if (!options.prune) {
    table.features = names;
    table.values = std::move(values);
    return table;
  }
  std::vector<std::size_t> kept;
  for (std::size_t f = 0; f < names.size(); ++f) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (std::abs(values(f, c)) > options.threshold) {
        kept.push_back(f);
        break;
      }
    }
  }
  table.values = values.select_rows(kept);
  for (std::size_t f : kept) table.features.push_back(names[f]);
  return table;
}

std::vector<std::pair<std::string, std::size_t>> frequent_words(
    const Corpus& corpus, std::size_t k, const std::set<std::string>* stoplist) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "k must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& t : corpus) {
    for (const auto& token : tokenize(t.text).tokens) {
      if (!counts_as_word(token.kind)) continue;
      if (stoplist && stoplist->contains(token.surface)) continue;
      ++counts[token.surface];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // counts is already lexicographic, so a stable sort on count settles ties.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

std::set<std::string> load_stoplist(const std::filesystem::path& path) {
  std::set<std::string> words;
  std::istringstream in(io::read_file(path));
  std::string raw;
  while (std::getline(in, raw)) {
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    words.insert(ascii_lower(line));
  }
  return words;
}

}  // namespace harass
