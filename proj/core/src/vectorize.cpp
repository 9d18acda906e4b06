#include "harass/vectorize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "harass/error.hpp"
#include "harass/io.hpp"

namespace harass {

double SparseVector::norm() const {
  double s = 0.0;
  for (const auto& [i, v] : entries) s += v * v;
  return std::sqrt(s);
}

TfidfModel::TfidfModel(std::vector<std::string> vocabulary, std::vector<double> idf, TfidfNorm norm,
                       std::string fitted_on)
    : vocabulary_(std::move(vocabulary)), idf_(std::move(idf)), norm_(norm), fitted_on_(std::move(fitted_on)) {
  if (vocabulary_.size() != idf_.size()) fail(ErrorCode::DimensionMismatch, "idf/vocabulary size mismatch");
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) index_.emplace(vocabulary_[i], i);
}

std::optional<std::size_t> TfidfModel::column(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SparseVector TfidfModel::transform(const TokenStream& tweet) const {
  std::map<std::size_t, double> counts;
  for (const auto& t : tweet.tokens) {
    if (!counts_as_word(t.kind)) continue;
    if (auto col = column(t.surface)) counts[*col] += 1.0;
  }
  SparseVector v;
  for (const auto& [col, count] : counts) v.entries.emplace_back(col, count * idf_[col]);
  if (norm_ == TfidfNorm::L2) {
    const double n = v.norm();
    if (n > 0.0) {
      for (auto& e : v.entries) e.second /= n;
    }
  }
  return v;
}

nlohmann::json TfidfModel::to_json() const {
  return {{"vocabulary", vocabulary_},
          {"idf", io::encode_doubles(idf_)},
          {"norm", norm_ == TfidfNorm::L2 ? "l2" : "none"},
          {"fitted_on", fitted_on_}};
}

TfidfModel TfidfModel::from_json(const nlohmann::json& j) {
  return TfidfModel(j.at("vocabulary").get<std::vector<std::string>>(),
                    io::decode_doubles(j.at("idf").get<std::string>()),
                    j.at("norm").get<std::string>() == "l2" ? TfidfNorm::L2 : TfidfNorm::None,
                    j.value("fitted_on", std::string()));
}

TfidfModel fit_tfidf(std::span<const TokenStream> documents, TfidfNorm norm, std::string fitted_on) {
  if (documents.empty()) fail(ErrorCode::EmptyCorpus, "cannot fit TF-IDF on zero documents");
  std::map<std::string, std::size_t> df;
  for (const auto& doc : documents) {
    std::set<std::string_view> seen;
    for (const auto& t : doc.tokens) {
      if (counts_as_word(t.kind) && seen.insert(t.surface).second) ++df[t.surface];
    }
  }
  std::vector<std::pair<std::string, std::size_t>> columns(df.begin(), df.end());
  std::stable_sort(columns.begin(), columns.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const double n = static_cast<double>(documents.size());
  std::vector<std::string> vocab;
  std::vector<double> idf;
  for (auto& [token, count] : columns) {
    vocab.push_back(token);
    idf.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
  }
  return TfidfModel(std::move(vocab), std::move(idf), norm, std::move(fitted_on));
}

TfidfModel fit_tfidf(const Corpus& corpus, TfidfNorm norm) {
  const auto docs = tokenize_corpus(corpus);
  return fit_tfidf(docs, norm, io::hex64(corpus.content_hash()));
}

// ---------------------------------------------------------------------------

std::string_view to_string(Block block) {
  switch (block) {
    case Block::T: return "T";
    case Block::L: return "L";
    case Block::WS: return "W(S)";
    case Block::WC: return "W(C)";
    case Block::FS: return "F(S)";
    case Block::FC: return "F(C)";
  }
  return "T";
}

bool is_embedding_block(Block block) { return block != Block::T && block != Block::L; }

bool FeatureSpec::contains(Block b) const {
  return std::find(blocks.begin(), blocks.end(), b) != blocks.end();
}

std::string FeatureSpec::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    if (i) out.push_back('+');
    out += harass::to_string(blocks[i]);
  }
  return out;
}

FeatureSpec parse_feature_spec(std::string_view text) {
  std::string compact;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
  }
  if (compact.empty()) fail(ErrorCode::EmptySpec, "feature spec is empty");
  FeatureSpec spec;
  std::size_t start = 0;
  while (true) {
    const std::size_t plus = compact.find('+', start);
    const std::string name = compact.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
    if (name.empty()) fail(ErrorCode::UnknownBlock, "'' in '" + std::string(text) + "'");
    std::optional<Block> block;
    for (Block b : {Block::T, Block::L, Block::WS, Block::WC, Block::FS, Block::FC}) {
      if (name == to_string(b)) block = b;
    }
    if (!block) fail(ErrorCode::UnknownBlock, "'" + name + "'");
    if (spec.contains(*block)) fail(ErrorCode::DuplicateBlock, "'" + name + "'");
    spec.blocks.push_back(*block);
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  return spec;
}

// ---------------------------------------------------------------------------

std::string FeatureMatrix::to_csv() const {
  std::ostringstream out;
  std::vector<std::string> header = {"id"};
  header.insert(header.end(), column_labels.begin(), column_labels.end());
  io::write_record(out, header, ',');
  std::vector<std::string> fields;
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    fields.assign(1, r < row_ids.size() ? row_ids[r] : std::to_string(r));
    for (double v : rows.row(r)) fields.push_back(io::format_double(v));
    io::write_record(out, fields, ',');
  }
  return out.str();
}

namespace {
constexpr char kMatrixMagic[8] = {'H', 'R', 'S', 'F', 'M', 'A', 'T', '1'};
constexpr std::uint32_t kMatrixVersion = 1;
}  // namespace

void save_matrix_binary(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  io::BinaryWriter w(out);
  w.bytes({kMatrixMagic, 8});
  w.u32(kMatrixVersion);
  w.u32(0);
  w.u64(m.rows());
  w.u64(m.cols());
  for (double v : m.data()) w.f64(v);
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

Matrix load_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  io::BinaryReader r(in);
  if (r.bytes(8) != std::string(kMatrixMagic, 8)) fail(ErrorCode::BadFormat, path.string() + ": bad magic");
  if (r.u32() != kMatrixVersion) fail(ErrorCode::BadFormat, path.string() + ": unsupported version");
  r.u32();
  const std::uint64_t rows = r.u64();
  const std::uint64_t cols = r.u64();
  Matrix m(rows, cols);
  for (double& v : m.data()) v = r.f64();
  return m;
}

// ---------------------------------------------------------------------------

std::vector<TokenStream> tokenize_corpus(const Corpus& corpus) {
  std::vector<TokenStream> out;
  out.reserve(corpus.size());
  for (const auto& t : corpus) out.push_back(tokenize(t.text, t.id));
  return out;
}

std::vector<std::string> corpus_ids(const Corpus& corpus) {
  std::vector<std::string> ids;
  ids.reserve(corpus.size());
  for (const auto& t : corpus) ids.push_back(t.id);
  return ids;
}

namespace {

const EmbeddingTable& embedding_for(Block block, const FeatureResources& resources) {
  auto it = resources.embeddings.find(block);
  if (it == resources.embeddings.end() || it->second == nullptr) {
    fail(ErrorCode::MissingResource, "no embedding table for block " + std::string(to_string(block)));
  }
  return *it->second;
}

const CategoryLexicon& lexicon_for(const FeatureResources& resources) {
  if (!resources.lexicon) fail(ErrorCode::MissingResource, "block L needs a category lexicon");
  return *resources.lexicon;
}

}  // namespace

void FeaturePipeline::layout(const FeatureResources& resources) {
  blocks_.clear();
  labels_.clear();
  std::size_t offset = 0;
  for (Block b : spec_.blocks) {
    const std::string prefix = std::string(to_string(b)) + ".";
    std::size_t width = 0;
    switch (b) {
      case Block::T:
        width = tfidf_->size();
        for (const auto& w : tfidf_->vocabulary()) labels_.push_back(prefix + w);
        break;
      case Block::L: {
        const auto names = liwc_feature_names(lexicon_for(resources));
        width = names.size();
        for (const auto& n : names) labels_.push_back(prefix + n);
        break;
      }
      default:
        width = composed_width(embedding_for(b, resources), spec_.composition);
        for (std::size_t d = 0; d < width; ++d) labels_.push_back(prefix + std::to_string(d));
        break;
    }
    blocks_.push_back({b, offset, offset + width});
    offset += width;
  }
}

Matrix FeaturePipeline::raw_features(std::span<const TokenStream> documents,
                                     const FeatureResources& resources) const {
  const std::size_t width = blocks_.empty() ? 0 : blocks_.back().end;
  Matrix out(documents.size(), width);
  for (const auto& range : blocks_) {
    const Block b = range.block;
    const CategoryLexicon* lexicon = b == Block::L ? &lexicon_for(resources) : nullptr;
    const EmbeddingTable* table = is_embedding_block(b) ? &embedding_for(b, resources) : nullptr;
    if (lexicon && liwc_feature_names(*lexicon).size() != range.width()) {
      fail(ErrorCode::DimensionMismatch, "lexicon has a different category count than at fit time");
    }
    if (table && composed_width(*table, spec_.composition) != range.width()) {
      fail(ErrorCode::DimensionMismatch, "embedding block " + std::string(to_string(b)) +
                                             " has a different width than at fit time");
    }
    for (std::size_t r = 0; r < documents.size(); ++r) {
      auto dst = out.row(r).subspan(range.begin, range.width());
      switch (b) {
        case Block::T:
          for (const auto& [col, v] : tfidf_->transform(documents[r]).entries) dst[col] = v;
          break;
        case Block::L: {
          const auto row = liwc_vector(*lexicon, documents[r]).dense();
          std::copy(row.begin(), row.end(), dst.begin());
          break;
        }
        default: {
          const auto v = compose_tweet(*table, documents[r], spec_.composition);
          std::copy(v.begin(), v.end(), dst.begin());
          break;
        }
      }
    }
  }
  return out;
}

FeaturePipeline FeaturePipeline::fit(std::span<const TokenStream> documents, const FeatureSpec& spec,
                                     const FeatureResources& resources, PipelineOptions options) {
  if (spec.blocks.empty()) fail(ErrorCode::EmptySpec, "feature spec is empty");
  if (documents.empty()) fail(ErrorCode::EmptyCorpus, "cannot fit features on zero documents");
  FeaturePipeline p;
  p.spec_ = spec;
  p.options_ = options;
  if (spec.contains(Block::T)) {
    p.tfidf_ = resources.tfidf ? *resources.tfidf : fit_tfidf(documents, options.tfidf_norm);
  }
  p.layout(resources);
  const Matrix raw = p.raw_features(documents, resources);
  const std::size_t width = raw.cols();
  p.mean_.assign(width, 0.0);
  p.scale_.assign(width, 1.0);
  if (!options.standardize) return p;

  const double n = static_cast<double>(raw.rows());
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto row = raw.row(r);
    for (std::size_t c = 0; c < width; ++c) p.mean_[c] += row[c];
  }
  for (double& m : p.mean_) m /= n;
  std::vector<double> var(width, 0.0);
  for (std::size_t r = 0; r < raw.rows(); ++r) {
    const auto row = raw.row(r);
    for (std::size_t c = 0; c < width; ++c) var[c] += (row[c] - p.mean_[c]) * (row[c] - p.mean_[c]);
  }
  for (std::size_t c = 0; c < width; ++c) {
    const double sd = std::sqrt(var[c] / n);
    // Spread at rounding-noise level relative to the mean counts as constant.
    p.scale_[c] = sd > 1e-12 * std::max(1.0, std::abs(p.mean_[c])) ? sd : 0.0;
  }
  return p;
}

FeatureMatrix FeaturePipeline::transform(std::span<const TokenStream> documents,
                                         std::span<const std::string> ids,
                                         const FeatureResources& resources) const {
  if (ids.size() != documents.size()) fail(ErrorCode::LengthMismatch, "ids and documents differ in length");
  FeatureMatrix fm;
  fm.rows = raw_features(documents, resources);
  for (std::size_t r = 0; r < fm.rows.rows(); ++r) {
    auto row = fm.rows.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      row[c] = scale_[c] == 0.0 ? 0.0 : (row[c] - mean_[c]) / scale_[c];
    }
  }
  for (double v : fm.rows.data()) {
    if (!std::isfinite(v)) fail(ErrorCode::NumericFailure, "non-finite feature value");
  }
  fm.row_ids.assign(ids.begin(), ids.end());
  fm.spec = spec_;
  fm.block_offsets = blocks_;
  fm.column_labels = labels_;
  return fm;
}

nlohmann::json FeaturePipeline::to_json() const {
  nlohmann::json blocks = nlohmann::json::array();
  for (const auto& b : blocks_) blocks.push_back({{"block", to_string(b.block)}, {"begin", b.begin}, {"end", b.end}});
  nlohmann::json j = {{"spec", spec_.to_string()},
                      {"composition", spec_.composition.to_string()},
                      {"standardize", options_.standardize},
                      {"tfidf_norm", options_.tfidf_norm == TfidfNorm::L2 ? "l2" : "none"},
                      {"blocks", blocks},
                      {"labels", labels_},
                      {"mean", io::encode_doubles(mean_)},
                      {"scale", io::encode_doubles(scale_)}};
  if (tfidf_) j["tfidf"] = tfidf_->to_json();
  return j;
}

FeaturePipeline FeaturePipeline::from_json(const nlohmann::json& j) {
  FeaturePipeline p;
  p.spec_ = parse_feature_spec(j.at("spec").get<std::string>());
  p.spec_.composition = parse_composition(j.at("composition").get<std::string>());
  p.options_.standardize = j.at("standardize").get<bool>();
  p.options_.tfidf_norm = j.at("tfidf_norm").get<std::string>() == "l2" ? TfidfNorm::L2 : TfidfNorm::None;
  for (const auto& b : j.at("blocks")) {
    const Block block = parse_feature_spec(b.at("block").get<std::string>()).blocks.front();
    p.blocks_.push_back({block, b.at("begin").get<std::size_t>(), b.at("end").get<std::size_t>()});
  }
  p.labels_ = j.at("labels").get<std::vector<std::string>>();
  p.mean_ = io::decode_doubles(j.at("mean").get<std::string>());
  p.scale_ = io::decode_doubles(j.at("scale").get<std::string>());
  if (j.contains("tfidf")) p.tfidf_ = TfidfModel::from_json(j.at("tfidf"));
  if (p.mean_.size() != p.scale_.size() || (!p.blocks_.empty() && p.blocks_.back().end != p.mean_.size())) {
    fail(ErrorCode::BadFormat, "inconsistent pipeline parameters");
  }
  return p;
}

FeatureMatrix build_features(const Corpus& corpus, const FeatureSpec& spec, const FeatureResources& resources,
                             PipelineOptions options, FeaturePipeline* fitted) {
  const auto docs = tokenize_corpus(corpus);
  const auto ids = corpus_ids(corpus);
  FeaturePipeline pipeline = FeaturePipeline::fit(docs, spec, resources, options);
  FeatureMatrix fm = pipeline.transform(docs, ids, resources);
  if (fitted) *fitted = std::move(pipeline);
  return fm;
}

}  // namespace harass
