#include "harass/embeddings.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "harass/error.hpp"
#include "harass/io.hpp"
#include "harass/random.hpp"

namespace harass {

std::string_view to_string(EmbeddingMode mode) {
  return mode == EmbeddingMode::SkipGram ? "skipgram" : "cbow";
}

EmbeddingMode parse_embedding_mode(std::string_view text) {
  if (text == "skipgram" || text == "sg" || text == "S") return EmbeddingMode::SkipGram;
  if (text == "cbow" || text == "C") return EmbeddingMode::Cbow;
  fail(ErrorCode::Config, "unknown embedding mode '" + std::string(text) + "'");
}

void EmbeddingConfig::validate() const {
  if (dim < 1 || window < 1 || min_count < 1 || negatives < 1) {
    fail(ErrorCode::Config, "dim, window, min_count and negatives must all be >= 1");
  }
  if (!(initial_lr > 0.0)) fail(ErrorCode::Config, "initial_lr must be positive");
  if (subsample < 0.0) fail(ErrorCode::Config, "subsample must be >= 0");
  if (threads < 1) fail(ErrorCode::Config, "threads must be >= 1");
  if (subword) {
    if (subword->n_min < 1 || subword->n_min > subword->n_max) {
      fail(ErrorCode::Config, "subword n-gram range must satisfy 1 <= n_min <= n_max");
    }
    if (subword->bucket_count < 1) fail(ErrorCode::Config, "bucket_count must be >= 1");
    if (add_context_vectors) fail(ErrorCode::Config, "add_context_vectors needs a word-level table");
  }
}

Vocabulary::Vocabulary(std::vector<std::string> words, std::vector<std::uint64_t> counts)
    : words_(std::move(words)), counts_(std::move(counts)) {
  counts_.resize(words_.size(), 0);
  for (std::size_t i = 0; i < words_.size(); ++i) index_.emplace(words_[i], i);
}

std::optional<std::size_t> Vocabulary::find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint64_t Vocabulary::total_count() const {
  std::uint64_t total = 0;
  for (auto c : counts_) total += c;
  return total;
}

Vocabulary build_vocab(std::span<const TokenStream> sentences, std::size_t min_count) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s.tokens) ++counts[t.surface];
  }
  std::vector<std::pair<std::string, std::uint64_t>> kept;
  for (auto& [word, count] : counts) {
    if (count >= min_count) kept.emplace_back(word, count);
  }
  if (kept.empty()) {
    fail(ErrorCode::EmptyVocabulary, "no token occurs at least " + std::to_string(min_count) + " times");
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> words;
  std::vector<std::uint64_t> freq;
  for (auto& [w, c] : kept) {
    words.push_back(std::move(w));
    freq.push_back(c);
  }
  return Vocabulary(std::move(words), std::move(freq));
}

std::uint32_t subword_bucket(std::string_view ngram, std::uint32_t bucket_count) {
  std::uint32_t h = 2166136261u;
  for (unsigned char c : ngram) {
    h ^= c;
    h *= 16777619u;
  }
  return h % bucket_count;
}

void initial_bucket_vector(std::uint64_t seed, std::uint32_t bucket, std::span<double> out) {
  Rng rng = Rng::derive(seed, bucket);
  const double bound = 1.0 / static_cast<double>(out.size());
  for (double& v : out) v = rng.uniform(-bound, bound);
}

// ---------------------------------------------------------------------------
// EmbeddingTable

EmbeddingTable::EmbeddingTable(EmbeddingConfig config, Vocabulary vocab, Matrix vectors)
    : config_(std::move(config)), vocab_(std::move(vocab)), vectors_(std::move(vectors)) {
  config_.subword.reset();
  if (vectors_.rows() != vocab_.size() || vectors_.cols() != config_.dim) {
    fail(ErrorCode::DimensionMismatch, "embedding matrix does not match vocabulary/dim");
  }
}

EmbeddingTable::EmbeddingTable(EmbeddingConfig config, Vocabulary vocab,
                               std::vector<std::uint32_t> bucket_ids, Matrix bucket_vectors)
    : config_(std::move(config)),
      vocab_(std::move(vocab)),
      bucket_ids_(std::move(bucket_ids)),
      bucket_vectors_(std::move(bucket_vectors)) {
  if (!config_.subword) config_.subword = SubwordSettings{};
  if (bucket_vectors_.rows() != bucket_ids_.size() ||
      (!bucket_ids_.empty() && bucket_vectors_.cols() != config_.dim)) {
    fail(ErrorCode::DimensionMismatch, "bucket matrix does not match bucket ids/dim");
  }
  for (std::size_t r = 0; r < bucket_ids_.size(); ++r) bucket_rows_.emplace(bucket_ids_[r], r);
  compose_vocab_vectors();
}

void EmbeddingTable::bucket_vector_into(std::uint32_t bucket, std::span<double> acc) const {
  if (auto it = bucket_rows_.find(bucket); it != bucket_rows_.end()) {
    const auto row = bucket_vectors_.row(it->second);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += row[d];
    return;
  }
  std::vector<double> init(acc.size());
  initial_bucket_vector(config_.seed, bucket, init);
  for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += init[d];
}

void EmbeddingTable::compose_vocab_vectors() {
  vectors_ = Matrix(vocab_.size(), config_.dim);
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    const auto v = word_vector(vocab_.word(i));
    std::copy(v->begin(), v->end(), vectors_.row(i).begin());
  }
}

std::optional<std::vector<double>> EmbeddingTable::word_vector(std::string_view token) const {
  if (!is_subword()) {
    const auto idx = vocab_.find(token);
    if (!idx) return std::nullopt;
    const auto row = vectors_.row(*idx);
    return std::vector<double>(row.begin(), row.end());
  }
  const auto& sw = *config_.subword;
  const auto grams = character_ngrams(token, sw.n_min, sw.n_max);
  std::vector<double> acc(config_.dim, 0.0);
  for (const auto& g : grams) bucket_vector_into(subword_bucket(g, sw.bucket_count), acc);
  const double scale = 1.0 / static_cast<double>(grams.size());
  for (double& v : acc) v *= scale;
  return acc;
}

namespace {
constexpr char kBucketMagic[8] = {'H', 'R', 'S', 'B', 'K', 'T', '0', '1'};
constexpr std::uint32_t kBucketVersion = 1;

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  return path.string() + ".bkt";
}
}  // namespace

void EmbeddingTable::save(const std::filesystem::path& path) const {
  std::ostringstream out;
  out << vocab_.size() << ' ' << config_.dim << '\n';
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    out << vocab_.word(i);
    for (double v : vectors_.row(i)) out << ' ' << io::format_double(v);
    out << '\n';
  }
  io::write_file(path, out.str());

  const auto side = sidecar_path(path);
  if (!is_subword()) {
    std::error_code ec;
    std::filesystem::remove(side, ec);
    return;
  }
  std::ofstream bin(side, std::ios::binary | std::ios::trunc);
  if (!bin) fail(ErrorCode::Io, "cannot write " + side.string());
  io::BinaryWriter w(bin);
  w.bytes({kBucketMagic, sizeof kBucketMagic});
  w.u32(kBucketVersion);
  w.u32(0);
  const auto& sw = *config_.subword;
  w.u32(static_cast<std::uint32_t>(config_.dim));
  w.u32(static_cast<std::uint32_t>(sw.n_min));
  w.u32(static_cast<std::uint32_t>(sw.n_max));
  w.u32(sw.bucket_count);
  w.u64(config_.seed);
  w.u64(bucket_ids_.size());
  for (std::size_t r = 0; r < bucket_ids_.size(); ++r) {
    w.u32(bucket_ids_[r]);
    for (double v : bucket_vectors_.row(r)) w.f64(v);
  }
  if (!bin) fail(ErrorCode::Io, "write failed for " + side.string());
}

EmbeddingTable load_embeddings(const std::filesystem::path& path) {
  std::istringstream in(io::read_file(path));
  std::size_t count = 0, dim = 0;
  if (!(in >> count >> dim) || dim == 0) fail(ErrorCode::BadFormat, path.string() + ": bad header line");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> words;
  Matrix vectors(count, dim);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line)) fail(ErrorCode::BadFormat, path.string() + ": truncated");
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    std::string value;
    for (std::size_t d = 0; d < dim; ++d) {
      if (!(ls >> value)) {
        fail(ErrorCode::BadFormat, path.string() + ": line " + std::to_string(i + 2) + " has too few values");
      }
      vectors(i, d) = io::parse_double(value);
    }
    words.push_back(std::move(word));
  }
  EmbeddingConfig config;
  config.dim = dim;
  config.min_count = 1;
  Vocabulary vocab(std::move(words), {});

  const auto side = sidecar_path(path);
  if (!std::filesystem::exists(side)) return EmbeddingTable(config, std::move(vocab), std::move(vectors));

  std::ifstream bin(side, std::ios::binary);
  io::BinaryReader r(bin);
  if (r.bytes(8) != std::string(kBucketMagic, 8)) fail(ErrorCode::BadFormat, side.string() + ": bad magic");
  if (r.u32() != kBucketVersion) fail(ErrorCode::BadFormat, side.string() + ": unsupported version");
  r.u32();
  SubwordSettings sw;
  const std::size_t bdim = r.u32();
  sw.n_min = r.u32();
  sw.n_max = r.u32();
  sw.bucket_count = r.u32();
  config.seed = r.u64();
  config.subword = sw;
  if (bdim != dim) fail(ErrorCode::DimensionMismatch, side.string() + ": dim differs from text file");
  const std::uint64_t rows = r.u64();
  std::vector<std::uint32_t> ids(rows);
  Matrix buckets(rows, dim);
  for (std::uint64_t i = 0; i < rows; ++i) {
    ids[i] = r.u32();
    for (std::size_t d = 0; d < dim; ++d) buckets(i, d) = r.f64();
  }
  return EmbeddingTable(config, std::move(vocab), std::move(ids), std::move(buckets));
}

// ---------------------------------------------------------------------------
// Negative-sampling objective

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
// log s(x) without overflow for large |x|.
double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }
}  // namespace

double negative_sampling_loss(std::span<const double> hidden, const Matrix& targets) {
  double loss = 0.0;
  for (std::size_t k = 0; k < targets.rows(); ++k) {
    const double score = dot(hidden, targets.row(k));
    loss -= k == 0 ? log_sigmoid(score) : log_sigmoid(-score);
  }
  return loss;
}

double negative_sampling_gradient(std::span<const double> hidden, const Matrix& targets,
                                  std::span<double> grad_hidden, Matrix& grad_targets) {
  if (grad_targets.rows() != targets.rows() || grad_targets.cols() != targets.cols()) {
    grad_targets = Matrix(targets.rows(), targets.cols());
  }
  std::fill(grad_hidden.begin(), grad_hidden.end(), 0.0);
  double loss = 0.0;
  for (std::size_t k = 0; k < targets.rows(); ++k) {
    const auto u = targets.row(k);
    const double score = dot(hidden, u);
    const double label = k == 0 ? 1.0 : 0.0;
    loss -= k == 0 ? log_sigmoid(score) : log_sigmoid(-score);
    // d/dscore of the k-th term is s(score) - label.
    const double g = sigmoid(score) - label;
    auto gu = grad_targets.row(k);
    for (std::size_t d = 0; d < hidden.size(); ++d) {
      grad_hidden[d] += g * u[d];
      gu[d] = g * hidden[d];
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Training

namespace {

class NegativeSampler {
 public:
  explicit NegativeSampler(const Vocabulary& vocab) {
    double total = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      total += std::pow(static_cast<double>(vocab.count(i)), 0.75);
      cumulative_.push_back(total);
    }
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform01() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

template <bool Shared>
double load(const double& x) {
  if constexpr (Shared) {
    return std::atomic_ref<double>(const_cast<double&>(x)).load(std::memory_order_relaxed);
  } else {
    return x;
  }
}

template <bool Shared>
void store(double& x, double v) {
  if constexpr (Shared) {
    std::atomic_ref<double>(x).store(v, std::memory_order_relaxed);
  } else {
    x = v;
  }
}

struct Model {
  Matrix input;
  Matrix output;
  std::vector<std::vector<std::size_t>> input_rows;  // per vocabulary word
  std::vector<std::uint32_t> bucket_ids;             // subword level only
};

struct Scratch {
  std::vector<double> hidden;
  std::vector<double> grad_hidden;
  std::vector<std::size_t> target_ids;
  Matrix targets;
  Matrix grad_targets;
};

// One SGD step: mean of the given input rows predicts `positive` against
// sampled negatives. As in the reference word2vec/fastText trainers, the
// hidden-layer gradient is applied in full to every contributing input row.
template <bool Shared>
void sgd_step(Model& m, std::span<const std::size_t> rows, std::size_t positive,
              const NegativeSampler& sampler, std::size_t negatives, double lr, Rng& rng,
              Scratch& s) {
  const std::size_t dim = m.output.cols();
  s.hidden.assign(dim, 0.0);
  for (std::size_t r : rows) {
    const auto in = m.input.row(r);
    for (std::size_t d = 0; d < dim; ++d) s.hidden[d] += load<Shared>(in[d]);
  }
  const double inv = 1.0 / static_cast<double>(rows.size());
  for (double& v : s.hidden) v *= inv;

  s.target_ids.clear();
  s.target_ids.push_back(positive);
  for (std::size_t k = 0; k < negatives; ++k) {
    const std::size_t neg = sampler.draw(rng);
    if (neg != positive) s.target_ids.push_back(neg);
  }
  if (s.targets.rows() != s.target_ids.size() || s.targets.cols() != dim) {
    s.targets = Matrix(s.target_ids.size(), dim);
  }
  for (std::size_t k = 0; k < s.target_ids.size(); ++k) {
    const auto out = m.output.row(s.target_ids[k]);
    auto dst = s.targets.row(k);
    for (std::size_t d = 0; d < dim; ++d) dst[d] = load<Shared>(out[d]);
  }
  s.grad_hidden.resize(dim);
  negative_sampling_gradient(s.hidden, s.targets, s.grad_hidden, s.grad_targets);

  for (std::size_t k = 0; k < s.target_ids.size(); ++k) {
    auto out = m.output.row(s.target_ids[k]);
    const auto g = s.grad_targets.row(k);
    for (std::size_t d = 0; d < dim; ++d) store<Shared>(out[d], load<Shared>(out[d]) - lr * g[d]);
  }
  for (std::size_t r : rows) {
    auto in = m.input.row(r);
    for (std::size_t d = 0; d < dim; ++d) {
      store<Shared>(in[d], load<Shared>(in[d]) - lr * s.grad_hidden[d]);
    }
  }
}

struct ProbeItem {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> targets;  // positive first
};

double probe_loss(const Model& m, const std::vector<ProbeItem>& probe) {
  if (probe.empty()) return 0.0;
  const std::size_t dim = m.output.cols();
  double total = 0.0;
  std::vector<double> hidden(dim);
  for (const auto& item : probe) {
    std::fill(hidden.begin(), hidden.end(), 0.0);
    for (std::size_t r : item.rows) {
      const auto in = m.input.row(r);
      for (std::size_t d = 0; d < dim; ++d) hidden[d] += in[d];
    }
    for (double& v : hidden) v /= static_cast<double>(item.rows.size());
    Matrix targets(item.targets.size(), dim);
    for (std::size_t k = 0; k < item.targets.size(); ++k) {
      const auto out = m.output.row(item.targets[k]);
      std::copy(out.begin(), out.end(), targets.row(k).begin());
    }
    total += negative_sampling_loss(hidden, targets);
  }
  return total / static_cast<double>(probe.size());
}

class Trainer {
 public:
  Trainer(std::span<const TokenStream> sentences, const EmbeddingConfig& config, Vocabulary vocab)
      : config_(config), vocab_(std::move(vocab)), sampler_(vocab_) {
    for (const auto& s : sentences) {
      std::vector<std::size_t> ids;
      for (const auto& t : s.tokens) {
        if (auto idx = vocab_.find(t.surface)) ids.push_back(*idx);
      }
      total_tokens_ += ids.size();
      if (ids.size() >= 2) corpus_.push_back(std::move(ids));
    }
    init_model();
    if (config_.subsample > 0.0) {
      const double total = static_cast<double>(vocab_.total_count());
      const double threshold = config_.subsample * total;
      for (std::size_t i = 0; i < vocab_.size(); ++i) {
        const double f = static_cast<double>(vocab_.count(i));
        keep_prob_.push_back(std::min(1.0, (std::sqrt(f / threshold) + 1.0) * threshold / f));
      }
    }
    build_probe();
  }

  void run(TrainingReport* report) {
    if (report) report->probe_losses.push_back(probe_loss(model_, probe_));
    const double budget = static_cast<double>(config_.epochs) * static_cast<double>(total_tokens_) + 1.0;
    for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
      if (config_.threads <= 1) {
        Rng rng = Rng::derive(config_.seed, 1000 + epoch);
        run_shard<false>(0, corpus_.size(), budget, rng);
      } else {
        std::vector<std::jthread> workers;
        const std::size_t n = config_.threads;
        for (std::size_t t = 0; t < n; ++t) {
          const std::size_t begin = corpus_.size() * t / n;
          const std::size_t end = corpus_.size() * (t + 1) / n;
          workers.emplace_back([this, begin, end, budget, epoch, t, n] {
            Rng rng = Rng::derive(config_.seed, 1000 + epoch * n + t);
            run_shard<true>(begin, end, budget, rng);
          });
        }
      }
      if (report) report->probe_losses.push_back(probe_loss(model_, probe_));
    }
    if (report) report->processed_tokens = processed_.load();
  }

  EmbeddingTable finish() && {
    if (!config_.subword) {
      if (config_.add_context_vectors) {
        auto in = model_.input.data();
        const auto out = model_.output.data();
        for (std::size_t i = 0; i < in.size(); ++i) in[i] += out[i];
      }
      return EmbeddingTable(config_, std::move(vocab_), std::move(model_.input));
    }
    return EmbeddingTable(config_, std::move(vocab_), std::move(model_.bucket_ids), std::move(model_.input));
  }

 private:
  void init_model() {
    const std::size_t dim = config_.dim;
    model_.output = Matrix(vocab_.size(), dim);
    model_.input_rows.resize(vocab_.size());
    if (!config_.subword) {
      model_.input = Matrix(vocab_.size(), dim);
      Rng rng(config_.seed);
      const double bound = 0.5 / static_cast<double>(dim);
      for (double& v : model_.input.data()) v = rng.uniform(-bound, bound);
      for (std::size_t i = 0; i < vocab_.size(); ++i) model_.input_rows[i] = {i};
      return;
    }
    const auto& sw = *config_.subword;
    std::unordered_map<std::uint32_t, std::size_t> rows;
    for (std::size_t i = 0; i < vocab_.size(); ++i) {
      for (const auto& g : character_ngrams(vocab_.word(i), sw.n_min, sw.n_max)) {
        const std::uint32_t b = subword_bucket(g, sw.bucket_count);
        auto [it, inserted] = rows.emplace(b, model_.bucket_ids.size());
        if (inserted) model_.bucket_ids.push_back(b);
        // A word keeps repeated n-grams, matching the lookup-time mean.
        model_.input_rows[i].push_back(it->second);
      }
    }
    model_.input = Matrix(model_.bucket_ids.size(), dim);
    for (std::size_t r = 0; r < model_.bucket_ids.size(); ++r) {
      initial_bucket_vector(config_.seed, model_.bucket_ids[r], model_.input.row(r));
    }
  }

  void build_probe() {
    if (corpus_.empty()) return;
    Rng rng = Rng::derive(config_.seed, 0x9f0be);
    const std::size_t items = std::min<std::size_t>(512, total_tokens_);
    for (std::size_t n = 0; n < items; ++n) {
      const auto& sentence = corpus_[rng.uniform_index(corpus_.size())];
      const std::size_t i = rng.uniform_index(sentence.size());
      ProbeItem item;
      const std::size_t lo = i >= config_.window ? i - config_.window : 0;
      const std::size_t hi = std::min(sentence.size() - 1, i + config_.window);
      if (config_.mode == EmbeddingMode::SkipGram) {
        std::size_t j = lo + rng.uniform_index(hi - lo);
        if (j >= i) ++j;
        item.rows = model_.input_rows[sentence[i]];
        item.targets.push_back(sentence[j]);
      } else {
        for (std::size_t j = lo; j <= hi; ++j) {
          if (j == i) continue;
          const auto& r = model_.input_rows[sentence[j]];
          item.rows.insert(item.rows.end(), r.begin(), r.end());
        }
        item.targets.push_back(sentence[i]);
      }
      for (std::size_t k = 0; k < config_.negatives; ++k) {
        const std::size_t neg = sampler_.draw(rng);
        if (neg != item.targets.front()) item.targets.push_back(neg);
      }
      probe_.push_back(std::move(item));
    }
  }

  template <bool Shared>
  void run_shard(std::size_t begin, std::size_t end, double budget, Rng& rng) {
    Scratch scratch;
    std::vector<std::size_t> ids;
    std::vector<std::size_t> context_rows;
    for (std::size_t s = begin; s < end; ++s) {
      const double progress = static_cast<double>(processed_.load(std::memory_order_relaxed)) / budget;
      const double lr = config_.initial_lr * std::max(1e-4, 1.0 - progress);
      ids.clear();
      for (std::size_t id : corpus_[s]) {
        if (keep_prob_.empty() || rng.uniform01() < keep_prob_[id]) ids.push_back(id);
      }
      for (std::size_t i = 0; i < ids.size(); ++i) {
        // Effective window drawn uniformly from 1..window.
        const std::size_t w = config_.window - rng.uniform_index(config_.window);
        const std::size_t lo = i >= w ? i - w : 0;
        const std::size_t hi = std::min(ids.size() - 1, i + w);
        if (config_.mode == EmbeddingMode::SkipGram) {
          for (std::size_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            sgd_step<Shared>(model_, model_.input_rows[ids[i]], ids[j], sampler_, config_.negatives, lr,
                             rng, scratch);
          }
        } else {
          context_rows.clear();
          for (std::size_t j = lo; j <= hi; ++j) {
            if (j == i) continue;
            const auto& r = model_.input_rows[ids[j]];
            context_rows.insert(context_rows.end(), r.begin(), r.end());
          }
          if (context_rows.empty()) continue;
          sgd_step<Shared>(model_, context_rows, ids[i], sampler_, config_.negatives, lr, rng, scratch);
        }
      }
      processed_.fetch_add(corpus_[s].size(), std::memory_order_relaxed);
    }
  }

  EmbeddingConfig config_;
  Vocabulary vocab_;
  NegativeSampler sampler_;
  Model model_;
  std::vector<std::vector<std::size_t>> corpus_;
  std::vector<double> keep_prob_;
  std::vector<ProbeItem> probe_;
  std::uint64_t total_tokens_ = 0;
  std::atomic<std::uint64_t> processed_{0};
};

}  // namespace

EmbeddingTable train_embeddings(std::span<const TokenStream> sentences, const EmbeddingConfig& config,
                                TrainingReport* report) {
  config.validate();
  Trainer trainer(sentences, config, build_vocab(sentences, config.min_count));
  trainer.run(report);
  EmbeddingTable table = std::move(trainer).finish();
  for (double v : table.input_vectors().data()) {
    if (!std::isfinite(v)) fail(ErrorCode::NumericFailure, "embedding training diverged");
  }
  return table;
}

// ---------------------------------------------------------------------------
// Composition and projection

std::string Composition::to_string() const {
  return kind == Kind::Mean ? "mean" : "concat:" + std::to_string(length);
}

Composition parse_composition(std::string_view text) {
  if (text == "mean") return {};
  if (text == "concat") return {Composition::Kind::ConcatPad, 30};
  if (text.starts_with("concat:")) {
    const auto n = text.substr(7);
    std::size_t length = 0;
    for (char c : n) {
      if (c < '0' || c > '9') fail(ErrorCode::Config, "bad composition '" + std::string(text) + "'");
      length = length * 10 + static_cast<std::size_t>(c - '0');
    }
    if (length == 0) fail(ErrorCode::Config, "concat length must be positive");
    return {Composition::Kind::ConcatPad, length};
  }
  fail(ErrorCode::Config, "unknown composition '" + std::string(text) + "'");
}

std::size_t composed_width(const EmbeddingTable& table, const Composition& composition) {
  return composition.kind == Composition::Kind::Mean ? table.dim() : table.dim() * composition.length;
}

std::vector<double> compose_tweet(const EmbeddingTable& table, const TokenStream& tweet,
                                  const Composition& composition) {
  const std::size_t dim = table.dim();
  std::vector<double> out(composed_width(table, composition), 0.0);
  if (composition.kind == Composition::Kind::Mean) {
    std::size_t used = 0;
    for (const auto& t : tweet.tokens) {
      const auto v = table.word_vector(t.surface);
      if (!v) continue;
      for (std::size_t d = 0; d < dim; ++d) out[d] += (*v)[d];
      ++used;
    }
    if (used > 0) {
      for (double& x : out) x /= static_cast<double>(used);
    }
    return out;
  }
  const std::size_t n = std::min(composition.length, tweet.tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = table.word_vector(tweet.tokens[i].surface);
    if (v) std::copy(v->begin(), v->end(), out.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  return out;
}

std::vector<std::pair<double, double>> pca_2d(const Matrix& points) {
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  if (n < 2) fail(ErrorCode::TooFewPoints, "need at least two points");
  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = points(i, j);
  }
  x.rowwise() -= x.colwise().mean();
  // Eigen-decomposition of the Gram matrix gives U * S directly.
  const Eigen::MatrixXd gram = x * x.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  const auto& values = solver.eigenvalues();    // ascending
  const auto& vectors = solver.eigenvectors();
  const double top = std::max(values(static_cast<Eigen::Index>(n - 1)), 0.0);

  std::vector<std::pair<double, double>> coords(n, {0.0, 0.0});
  for (int axis = 0; axis < 2; ++axis) {
    const auto col = static_cast<Eigen::Index>(n - 1 - static_cast<std::size_t>(axis));
    const double lambda = values(col);
    if (lambda <= 1e-12 * top || lambda <= 0.0) continue;
    Eigen::VectorXd c = vectors.col(col) * std::sqrt(lambda);
    // Deterministic sign: largest-magnitude coordinate is positive.
    Eigen::Index arg = 0;
    c.cwiseAbs().maxCoeff(&arg);
    if (c(arg) < 0) c = -c;
    for (std::size_t i = 0; i < n; ++i) {
      (axis == 0 ? coords[i].first : coords[i].second) = c(static_cast<Eigen::Index>(i));
    }
  }
  return coords;
}

std::vector<Point2d> project_2d(const EmbeddingTable& table, std::span<const std::string> tokens) {
  Matrix points;
  std::vector<std::string> kept;
  for (const auto& t : tokens) {
    const auto v = table.word_vector(t);
    if (!v) continue;
    points.append_row(*v);
    kept.push_back(t);
  }
  if (kept.size() < 2) fail(ErrorCode::TooFewPoints, "fewer than two resolvable tokens");
  const auto coords = pca_2d(points);
  std::vector<Point2d> out;
  for (std::size_t i = 0; i < kept.size(); ++i) out.push_back({kept[i], coords[i].first, coords[i].second});
  return out;
}

}  // namespace harass
