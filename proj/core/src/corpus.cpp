#include "harass/corpus.hpp"

#include <algorithm>
#include <chrono>
#include <sstream>

#include "harass/io.hpp"
#include "harass/random.hpp"

namespace harass {

std::string_view to_string(HarassmentType type) {
  switch (type) {
    case HarassmentType::Sexual: return "sexual";
    case HarassmentType::Racial: return "racial";
    case HarassmentType::Appearance: return "appearance";
    case HarassmentType::Intellectual: return "intellectual";
    case HarassmentType::Political: return "political";
  }
  return "sexual";
}

std::string_view to_string(Label label) {
  return label == Label::Harassing ? "harassing" : "nonharassing";
}

std::string_view to_string(AnnotationVote vote) {
  switch (vote) {
    case AnnotationVote::Yes: return "yes";
    case AnnotationVote::No: return "no";
    case AnnotationVote::Other: return "other";
  }
  return "other";
}

std::string_view to_string(Consensus consensus) {
  switch (consensus) {
    case Consensus::Harassing: return "harassing";
    case Consensus::NonHarassing: return "nonharassing";
    case Consensus::Undecidable: return "undecidable";
  }
  return "undecidable";
}

namespace {

std::string normalize_key(std::string_view text) {
  std::string out;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') continue;
    out.push_back((c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c);
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

HarassmentType parse_type(std::string_view text) {
  const std::string key = normalize_key(text);
  for (auto type : kAllTypes) {
    if (key == to_string(type)) return type;
  }
  if (key == "appearance-related" || key == "appearancerelated") return HarassmentType::Appearance;
  fail(ErrorCode::UnknownType, "'" + std::string(text) + "'");
}

Label parse_label(std::string_view text) {
  const std::string key = normalize_key(text);
  if (key == "harassing" || key == "1") return Label::Harassing;
  if (key == "nonharassing" || key == "non-harassing" || key == "0") return Label::NonHarassing;
  fail(ErrorCode::UnknownLabel, "'" + std::string(text) + "'");
}

AnnotationVote parse_vote(std::string_view text) {
  const std::string key = normalize_key(text);
  if (key == "yes" || key == "y") return AnnotationVote::Yes;
  if (key == "no" || key == "n") return AnnotationVote::No;
  if (key == "other" || key == "o") return AnnotationVote::Other;
  fail(ErrorCode::UnknownLabel, "vote '" + std::string(text) + "'");
}

std::vector<AnnotationVote> parse_votes(std::string_view text) {
  std::vector<AnnotationVote> votes;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t bar = text.find('|', start);
    const auto piece = text.substr(start, bar == std::string_view::npos ? std::string_view::npos : bar - start);
    votes.push_back(parse_vote(piece));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return votes;
}

std::string format_votes(std::span<const AnnotationVote> votes) {
  std::string out;
  for (std::size_t i = 0; i < votes.size(); ++i) {
    if (i) out.push_back('|');
    out += to_string(votes[i]);
  }
  return out;
}

void Corpus::add(LabeledTweet tweet) {
  if (trim(tweet.text).empty()) fail(ErrorCode::EmptyText, "'" + tweet.id + "'");
  if (tweet.votes && tweet.votes->empty()) {
    fail(ErrorCode::InvalidArgument, "tweet '" + tweet.id + "' has an empty vote list");
  }
  auto [it, inserted] = index_.emplace(tweet.id, tweets_.size());
  if (!inserted) fail(ErrorCode::DuplicateId, "'" + tweet.id + "'");
  tweets_.push_back(std::move(tweet));
}

std::uint64_t Corpus::content_hash() const {
  std::uint64_t h = io::fnv1a64("corpus/v1");
  for (const auto& t : tweets_) {
    h = io::fnv1a64(t.id, h);
    h = io::fnv1a64(std::string_view("\x1f", 1), h);
    h = io::fnv1a64(t.text, h);
    h = io::fnv1a64(std::string_view("\x1f", 1), h);
    h = io::fnv1a64(to_string(t.type), h);
    h = io::fnv1a64(to_string(t.label), h);
    if (t.votes) h = io::fnv1a64(format_votes(*t.votes), h);
    h = io::fnv1a64(std::string_view("\x1e", 1), h);
  }
  return h;
}

Corpus Corpus::subset(std::span<const std::size_t> indices) const {
  Corpus out(provenance_);
  for (std::size_t i : indices) out.add(tweets_.at(i));
  return out;
}

CorpusFormat format_for_path(const std::filesystem::path& path) {
  const auto ext = normalize_key(path.extension().string());
  return (ext == ".tsv" || ext == ".tab") ? CorpusFormat::Tsv : CorpusFormat::Csv;
}

namespace {

char delimiter_of(CorpusFormat format) { return format == CorpusFormat::Tsv ? '\t' : ','; }

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

Corpus parse_corpus(std::string_view content, CorpusFormat format, std::string source) {
  // Tolerate a UTF-8 byte order mark.
  if (content.starts_with("\xEF\xBB\xBF")) content.remove_prefix(3);
  const auto records = io::read_delimited(content, delimiter_of(format));
  if (records.empty()) fail(ErrorCode::MalformedRow, "line 1: missing header row");

  const auto& header = records.front();
  std::map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < header.fields.size(); ++i) {
    columns[normalize_key(header.fields[i])] = i;
  }
  for (const char* required : {"id", "text", "type", "label"}) {
    if (!columns.contains(required)) {
      fail(ErrorCode::MalformedRow, "line 1: header lacks column '" + std::string(required) + "'");
    }
  }
  const std::size_t id_col = columns["id"], text_col = columns["text"], type_col = columns["type"],
                    label_col = columns["label"];
  const std::optional<std::size_t> votes_col =
      columns.contains("votes") ? std::optional(columns["votes"]) : std::nullopt;

  Corpus corpus(Provenance{std::move(source), utc_now()});
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.fields.size() != header.fields.size()) {
      fail(ErrorCode::MalformedRow, "line " + std::to_string(rec.line) + ": expected " +
                                        std::to_string(header.fields.size()) + " fields, got " +
                                        std::to_string(rec.fields.size()));
    }
    LabeledTweet tweet;
    tweet.id = std::string(trim(rec.fields[id_col]));
    if (tweet.id.empty()) fail(ErrorCode::MalformedRow, "line " + std::to_string(rec.line) + ": empty id");
    tweet.text = rec.fields[text_col];
    tweet.type = parse_type(rec.fields[type_col]);
    tweet.label = parse_label(rec.fields[label_col]);
    if (votes_col && !trim(rec.fields[*votes_col]).empty()) {
      tweet.votes = parse_votes(trim(rec.fields[*votes_col]));
      const Consensus consensus = consensus_label(*tweet.votes);
      if (consensus == Consensus::Undecidable) continue;
      const Label agreed = consensus == Consensus::Harassing ? Label::Harassing : Label::NonHarassing;
      if (agreed != tweet.label) {
        fail(ErrorCode::LabelVoteMismatch, "line " + std::to_string(rec.line) + ": label '" +
                                               std::string(to_string(tweet.label)) +
                                               "' contradicts votes '" + format_votes(*tweet.votes) + "'");
      }
    }
    corpus.add(std::move(tweet));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format) {
  return parse_corpus(io::read_file(path), format, path.string());
}

std::string serialize_corpus(const Corpus& corpus, CorpusFormat format) {
  const char delim = delimiter_of(format);
  const bool with_votes = std::any_of(corpus.begin(), corpus.end(),
                                      [](const LabeledTweet& t) { return t.votes.has_value(); });
  std::ostringstream out;
  std::vector<std::string> header = {"id", "text", "type", "label"};
  if (with_votes) header.emplace_back("votes");
  io::write_record(out, header, delim);
  for (const auto& t : corpus) {
    std::vector<std::string> row = {t.id, t.text, std::string(to_string(t.type)),
                                    std::string(to_string(t.label))};
    if (with_votes) row.push_back(t.votes ? format_votes(*t.votes) : std::string());
    io::write_record(out, row, delim);
  }
  return out.str();
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path, CorpusFormat format) {
  io::write_file(path, serialize_corpus(corpus, format));
}

Consensus consensus_label(std::span<const AnnotationVote> votes) {
  const auto yes = std::count(votes.begin(), votes.end(), AnnotationVote::Yes);
  const auto no = std::count(votes.begin(), votes.end(), AnnotationVote::No);
  if (yes >= 2 && no < 2) return Consensus::Harassing;
  if (no >= 2 && yes < 2) return Consensus::NonHarassing;
  return Consensus::Undecidable;
}

Corpus filter_corpus(const Corpus& corpus, std::optional<HarassmentType> type,
                     std::optional<Label> label) {
  Corpus out(corpus.provenance());
  for (const auto& t : corpus) {
    if (type && t.type != *type) continue;
    if (label && t.label != *label) continue;
    out.add(t);
  }
  return out;
}

Corpus balanced_undersample(const Corpus& corpus, std::uint64_t seed) {
  std::vector<std::size_t> harassing, non_harassing;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    (corpus[i].label == Label::Harassing ? harassing : non_harassing).push_back(i);
  }
  if (harassing.empty() || non_harassing.empty()) {
    fail(ErrorCode::SingleClassCorpus, "corpus needs both harassing and non-harassing tweets");
  }
  auto& minority = harassing.size() <= non_harassing.size() ? harassing : non_harassing;
  auto& majority = harassing.size() <= non_harassing.size() ? non_harassing : harassing;

  Rng rng(seed);
  // Partial Fisher-Yates: the first |minority| slots become the sample.
  for (std::size_t i = 0; i < minority.size(); ++i) {
    const std::size_t j = i + rng.uniform_index(majority.size() - i);
    std::swap(majority[i], majority[j]);
  }
  std::vector<std::size_t> keep(minority.begin(), minority.end());
  keep.insert(keep.end(), majority.begin(), majority.begin() + static_cast<std::ptrdiff_t>(minority.size()));
  std::sort(keep.begin(), keep.end());
  return corpus.subset(keep);
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t repeat, std::size_t fold) const {
  std::vector<std::size_t> out;
  const auto& a = assignments.at(repeat);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::test_indices(std::size_t repeat, std::size_t fold) const {
  std::vector<std::size_t> out;
  const auto& a = assignments.at(repeat);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_folds(std::span<const int> strata, std::size_t k, std::size_t repeats,
                    std::uint64_t seed) {
  if (k < 2) fail(ErrorCode::InvalidArgument, "k must be at least 2");
  if (repeats < 1) fail(ErrorCode::InvalidArgument, "repeats must be at least 1");
  if (strata.size() < k) {
    fail(ErrorCode::TooFewItems, std::to_string(strata.size()) + " items for " + std::to_string(k) + " folds");
  }
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < strata.size(); ++i) groups[strata[i]].push_back(i);

  FoldPlan plan{k, repeats, seed, {}};
  Rng rng(seed);
  for (std::size_t r = 0; r < repeats; ++r) {
    std::vector<std::size_t> assignment(strata.size());
    // Dealing round-robin with a cursor shared across strata keeps both the
    // per-stratum and the overall fold sizes within one of each other.
    std::size_t cursor = 0;
    for (auto& [stratum, members] : groups) {
      std::vector<std::size_t> order = members;
      rng.shuffle(std::span<std::size_t>(order));
      for (std::size_t idx : order) assignment[idx] = cursor++ % k;
    }
    plan.assignments.push_back(std::move(assignment));
  }
  return plan;
}

FoldPlan make_folds(const Corpus& corpus, std::size_t k, std::size_t repeats, std::uint64_t seed) {
  std::vector<int> strata;
  strata.reserve(corpus.size());
  for (const auto& t : corpus) strata.push_back(static_cast<int>(t.label));
  return make_folds(strata, k, repeats, seed);
}

CorpusStats corpus_stats(const Corpus& corpus) {
  CorpusStats stats;
  for (const auto& t : corpus) {
    auto& row = stats.per_type[static_cast<std::size_t>(t.type)];
    for (TypeCounts* c : {&row, &stats.combined}) {
      ++c->annotated;
      if (t.label == Label::Harassing) ++c->harassing; else ++c->non_harassing;
    }
  }
  return stats;
}

}  // namespace harass
