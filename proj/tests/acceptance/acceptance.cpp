// Acceptance suite: one PASS/FAIL/SKIP line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli.hpp"
#include "harass/classify.hpp"
#include "harass/embeddings.hpp"
#include "harass/evaluate.hpp"
#include "harass/io.hpp"
#include "harass/lexicon.hpp"
#include "harass/vectorize.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace harass;
using harass::testing::Gen;

namespace {

struct Outcome {
  enum class Status { Pass, Fail, Skip } status = Status::Pass;
  std::string detail;
};

// Collects failed sub-checks; a criterion passes when none failed.
class Checks {
 public:
  void expect(bool ok, const std::string& what) {
    ++total_;
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    failed_ += !ok;
  }
  bool ok() const { return failed_ == 0; }
  Outcome outcome(std::string detail) const {
    if (ok()) return {Outcome::Status::Pass, std::move(detail)};
    std::string msg = std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed";
    for (const auto& f : failures_) msg += "; " + f;
    return {Outcome::Status::Fail, msg + " | " + detail};
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

std::string fmt(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::vector<std::string> class_names(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < k; ++c) out.push_back("c" + std::to_string(c));
  return out;
}

int run_cli(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

double safe_ratio(double a, double b) { return b == 0 ? 0.0 : a / b; }
double f_of(double p, double r) { return p + r == 0 ? 0.0 : 2 * p * r / (p + r); }

// ---------------------------------------------------------------------------
// 1. Metric oracle equivalence

Outcome metric_oracle() {
  Gen gen(101);
  Checks checks;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + gen.index(200), k = 2 + gen.index(5);
    std::vector<int> truth(n), pred(n);
    for (std::size_t i = 0; i < n; ++i) {
      truth[i] = static_cast<int>(gen.index(k));
      pred[i] = gen.coin(0.5) ? truth[i] : static_cast<int>(gen.index(k));
    }
    const auto cm = confusion(truth, pred, class_names(k));
    for (std::size_t a = 0; a < k; ++a) {
      for (std::size_t b = 0; b < k; ++b) {
        std::uint64_t count = 0;
        for (std::size_t i = 0; i < n; ++i) count += truth[i] == int(a) && pred[i] == int(b);
        checks.expect(cm.at(a, b) == count, "confusion cell");
      }
    }
    const auto report = metrics_for(cm);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) correct += truth[i] == pred[i];
    const double accuracy = double(correct) / double(n);
    checks.expect(std::abs(*report.accuracy - accuracy) <= 1e-12, "accuracy");
    std::vector<double> fs;
    for (std::size_t c = 0; c < k; ++c) {
      double tp = 0, fp = 0, fn = 0, tn = 0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool t = truth[i] == int(c), p = pred[i] == int(c);
        tp += t && p;
        fp += !t && p;
        fn += t && !p;
        tn += !t && !p;
      }
      const double precision = safe_ratio(tp, tp + fp), recall = safe_ratio(tp, tp + fn);
      fs.push_back(f_of(precision, recall));
      const ClassMetrics* m = nullptr;
      if (k == 2 && c == 1) {
        m = &report.per_class[0];
        checks.expect(std::abs(*report.specificity - safe_ratio(tn, tn + fp)) <= 1e-12, "specificity");
      } else if (k > 2) {
        m = &report.per_class[c];
      }
      if (!m) continue;
      checks.expect(std::abs(m->precision - precision) <= 1e-12, "precision");
      checks.expect(std::abs(m->recall - recall) <= 1e-12, "recall");
      checks.expect(std::abs(m->f_score - fs.back()) <= 1e-12, "f-score");
    }
    if (k > 2) {
      const double macro_f = std::accumulate(fs.begin(), fs.end(), 0.0) / double(k);
      checks.expect(std::abs(report.macro->f_score - macro_f) <= 1e-12, "macro F");
      checks.expect(std::abs(report.micro->precision - accuracy) <= 1e-12 &&
                        std::abs(report.micro->recall - accuracy) <= 1e-12 &&
                        std::abs(report.micro->f_score - accuracy) <= 1e-12,
                    "micro identity");
    }
  }
  return checks.outcome("1000 random label vectors");
}

// ---------------------------------------------------------------------------
// 2. Effect-size oracle

double oracle_effect(const std::vector<double>& e, const std::vector<double>& c) {
  const double me = std::accumulate(e.begin(), e.end(), 0.0) / double(e.size());
  const double mc = std::accumulate(c.begin(), c.end(), 0.0) / double(c.size());
  double ve = 0, vc = 0;
  for (double x : e) ve += (x - me) * (x - me);
  for (double x : c) vc += (x - mc) * (x - mc);
  ve /= double(e.size() - 1);
  vc /= double(c.size() - 1);
  const double pooled = ((e.size() - 1) * ve + (c.size() - 1) * vc) / double(e.size() + c.size() - 2);
  return (me - mc) / std::sqrt(pooled);
}

Outcome effect_size_oracle() {
  Gen gen(202);
  Checks checks;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n1 = 2 + gen.index(60), n2 = 2 + gen.index(60);
    std::vector<double> e(n1), c(n2);
    const double shift = gen.real(-2, 2), scale = gen.real(0.1, 3);
    for (auto& x : e) x = gen.normal(shift, scale);
    for (auto& x : c) x = gen.normal(0, scale);
    const double d = effect_size(e, c);
    const double expected = oracle_effect(e, c);
    checks.expect(std::abs(d - expected) <= 1e-12 * std::max(1.0, std::abs(expected)), "oracle");
    checks.expect(std::abs(effect_size(c, e) + d) <= 1e-12 * std::max(1.0, std::abs(d)), "antisymmetry");
    const double k = gen.real(-50, 50);
    auto es = e, cs = c;
    for (auto& x : es) x += k;
    for (auto& x : cs) x += k;
    checks.expect(std::abs(effect_size(es, cs) - d) <= 1e-9 * std::max(1.0, std::abs(d)), "shift invariance");
  }
  return checks.outcome("1000 random group pairs");
}

// ---------------------------------------------------------------------------
// 3. TF-IDF oracle

Outcome tfidf_oracle() {
  Gen gen(303);
  Checks checks;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n_docs = 1 + gen.index(50), vocab = 1 + gen.index(30);
    std::vector<std::vector<std::string>> words(n_docs);
    std::vector<TokenStream> docs;
    for (auto& d : words) {
      const std::size_t len = gen.index(15);
      std::string line;
      for (std::size_t i = 0; i < len; ++i) {
        d.push_back("v" + std::to_string(gen.index(vocab)));
        line += d.back() + " ";
      }
      docs.push_back(tokenize(line));
    }
    const auto model = fit_tfidf(docs);
    std::map<std::string, double> df;
    for (const auto& d : words) {
      for (const auto& w : std::set<std::string>(d.begin(), d.end())) df[w] += 1;
    }
    for (std::size_t i = 0; i < n_docs; ++i) {
      std::map<std::string, double> expected;
      for (const auto& w : words[i]) expected[w] += std::log((1.0 + double(n_docs)) / (1.0 + df[w])) + 1.0;
      double ss = 0;
      for (const auto& [w, v] : expected) ss += v * v;
      for (auto& [w, v] : expected) v /= std::sqrt(ss);
      const auto got = model.transform(docs[i]);
      checks.expect(got.entries.size() == expected.size(), "nonzero count");
      for (const auto& [col, v] : got.entries) {
        checks.expect(std::abs(v - expected[model.vocabulary()[col]]) <= 1e-12, "tf-idf value");
      }
      const double norm = got.norm();
      checks.expect(got.entries.empty() ? norm == 0.0 : std::abs(norm - 1.0) <= 1e-12, "row norm");
    }
  }
  return checks.outcome("200 random mini-corpora");
}

// ---------------------------------------------------------------------------
// 4. NB / KNN oracles

std::vector<int> labels_with_all(Gen& gen, std::size_t n, std::size_t k) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = i < k ? int(i) : int(gen.index(k));
  return y;
}

Outcome nb_knn_oracle() {
  Gen gen(404);
  Checks checks;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen.index(19), d = 1 + gen.index(10), k = 2 + gen.index(std::min<std::size_t>(n - 1, 3));
    const auto y = labels_with_all(gen, n, k);
    Matrix x(n, d);
    for (auto& v : x.data()) v = double(gen.index(4));
    const auto model = train_nb(x, y, class_names(k));
    Matrix q(4, d);
    for (auto& v : q.data()) v = double(gen.index(4));
    const auto pred = predict(model, q);
    for (std::size_t r = 0; r < q.rows(); ++r) {
      std::vector<double> joint(k);
      for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> count(d, 0.0);
        double prior = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (y[i] != int(c)) continue;
          prior += 1;
          for (std::size_t j = 0; j < d; ++j) count[j] += x(i, j);
        }
        const double total = std::accumulate(count.begin(), count.end(), 0.0);
        joint[c] = std::log(prior / double(n));
        for (std::size_t j = 0; j < d; ++j) joint[c] += q(r, j) * std::log((count[j] + 1.0) / (total + double(d)));
      }
      const double top = *std::max_element(joint.begin(), joint.end());
      double z = 0;
      for (double v : joint) z += std::exp(v - top);
      for (std::size_t c = 0; c < k; ++c) {
        const double expected = std::exp(joint[c] - top) / z;
        checks.expect(std::abs(pred.scores(r, c) - expected) <= 1e-10 * expected, "NB posterior");
      }
    }
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + gen.index(1000), d = 1 + gen.index(5), k = 2 + gen.index(3);
    const auto y = labels_with_all(gen, std::max(n, k), k);
    Matrix x(y.size(), d);
    for (auto& v : x.data()) v = double(gen.integer(-4, 4));
    const std::size_t kk = 1 + gen.index(std::min<std::size_t>(y.size(), 25));
    const auto model = train_knn(x, y, class_names(k), kk);
    Matrix q(5, d);
    for (auto& v : q.data()) v = double(gen.integer(-4, 4));
    const auto pred = predict(model, q);
    for (std::size_t r = 0; r < q.rows(); ++r) {
      std::vector<std::pair<double, std::size_t>> order;
      for (std::size_t i = 0; i < y.size(); ++i) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += (q(r, j) - x(i, j)) * (q(r, j) - x(i, j));
        order.push_back({s, i});
      }
      std::sort(order.begin(), order.end());
      std::vector<int> votes(k, 0);
      for (std::size_t i = 0; i < kk; ++i) ++votes[y[order[i].second]];
      const int expected = int(std::max_element(votes.begin(), votes.end()) - votes.begin());
      checks.expect(pred.labels[r] == expected, "KNN label");
    }
  }
  return checks.outcome("200 NB and 100 KNN instances");
}

// ---------------------------------------------------------------------------
// 5. GBM behaviour

Outcome gbm_suite() {
  Gen gen(505);
  Checks checks;
  // (a) staged loss
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 30 + gen.index(150), d = 1 + gen.index(6);
    const std::size_t k = trial % 5 == 4 ? 3 : 2;
    const auto y = labels_with_all(gen, n, k);
    Matrix x(n, d);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) x(i, j) = gen.normal(y[i] * 0.7, 1.0);
    }
    GbmConfig c;
    c.n_trees = 50;
    c.seed = std::uint64_t(trial);
    const auto model = train_gbm(x, y, class_names(k), c);
    const auto& loss = std::get<GbmParams>(model.params).staged_loss;
    for (std::size_t s = 1; s < loss.size(); ++s) checks.expect(loss[s] <= loss[s - 1] + 1e-9, "(a) staged loss");
  }
  // (b) split search
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen.index(199), d = 1 + gen.index(5);
    Matrix x(n, d);
    for (auto& v : x.data()) v = gen.coin() ? double(gen.integer(0, 6)) : gen.real(-1, 1);
    const auto target = gen.reals(n, -1, 1);
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    double best = 0, second = 0;
    std::size_t best_f = 0;
    double best_t = 0;
    for (std::size_t f = 0; f < d; ++f) {
      std::vector<double> values(x.data().begin(), x.data().begin());
      for (std::size_t i = 0; i < n; ++i) values.push_back(x(i, f));
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t v = 0; v + 1 < values.size(); ++v) {
        double sl = 0, sr = 0, nl = 0, nr = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (x(i, f) <= values[v]) {
            sl += target[i];
            nl += 1;
          } else {
            sr += target[i];
            nr += 1;
          }
        }
        const double gain = nl * nr / (nl + nr) * std::pow(sl / nl - sr / nr, 2);
        if (gain > best) {
          second = best;
          best = gain;
          best_f = f;
          best_t = values[v] + (values[v + 1] - values[v]) / 2;
        } else if (gain > second) {
          second = gain;
        }
      }
    }
    const auto got = best_split(x, target, rows, 1);
    if (best == 0) {
      checks.expect(!got, "(b) no split");
      continue;
    }
    checks.expect(got && std::abs(got->improvement - best) <= 1e-9 * best, "(b) improvement");
    if (got && second < best * (1 - 1e-9)) {
      checks.expect(got->feature == best_f && got->threshold == best_t, "(b) split location");
    }
  }
  // (c) XOR with the published settings
  Matrix x(200, 2);
  std::vector<int> y(200);
  const double centers[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  for (std::size_t i = 0; i < 200; ++i) {
    x(i, 0) = centers[i / 50][0] + gen.normal(0, 0.1);
    x(i, 1) = centers[i / 50][1] + gen.normal(0, 0.1);
    y[i] = i < 100 ? 0 : 1;
  }
  const auto model = train_gbm(x, y, class_names(2), GbmConfig{});
  const auto pred = predict(model, x).labels;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < 200; ++i) hit += pred[i] == y[i];
  const double xor_acc = double(hit) / 200.0;
  checks.expect(xor_acc >= 0.95, "(c) XOR accuracy " + fmt(xor_acc));
  // (d) reproducibility
  GbmConfig sub;
  sub.subsample = 0.7;
  sub.seed = 9;
  const auto a = model_to_json(train_gbm(x, y, class_names(2), sub));
  const auto b = model_to_json(train_gbm(x, y, class_names(2), sub));
  checks.expect(a == b, "(d) reproducible");
  checks.expect(model_to_json(model) == model_to_json(train_gbm(x, y, class_names(2), GbmConfig{})), "(d) default");
  return checks.outcome("XOR training accuracy " + fmt(xor_acc, 3));
}

// ---------------------------------------------------------------------------
// 6. Embeddings

double pair_margin(const EmbeddingTable& t, std::size_t pairs) {
  const auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
    return dot(a, b) / std::sqrt(dot(a, a) * dot(b, b));
  };
  double paired = 0, unpaired = 0, n_unpaired = 0;
  for (std::size_t i = 0; i < pairs; ++i) {
    const auto xi = *t.word_vector("x" + std::to_string(i));
    paired += cosine(xi, *t.word_vector("y" + std::to_string(i)));
    for (std::size_t j = 0; j < pairs; ++j) {
      if (j == i) continue;
      unpaired += cosine(xi, *t.word_vector("y" + std::to_string(j)));
      n_unpaired += 1;
    }
  }
  return paired / double(pairs) - unpaired / n_unpaired;
}

Outcome embedding_suite() {
  Gen gen(606);
  Checks checks;
  // (a) gradient
  for (int trial = 0; trial < 50; ++trial) {
    auto h = gen.reals(5, -0.5, 0.5);
    const Matrix u = gen.matrix(1 + 1 + gen.index(5), 5, -0.5, 0.5);
    std::vector<double> gh(5);
    Matrix gu;
    negative_sampling_gradient(h, u, gh, gu);
    const double eps = 1e-6;
    for (std::size_t j = 0; j < 5; ++j) {
      auto hp = h, hm = h;
      hp[j] += eps;
      hm[j] -= eps;
      const double fd = (negative_sampling_loss(hp, u) - negative_sampling_loss(hm, u)) / (2 * eps);
      checks.expect(std::abs(fd - gh[j]) <= 1e-4 * std::max(std::abs(fd), 1e-3), "(a) hidden gradient");
    }
    for (std::size_t k = 0; k < u.rows(); ++k) {
      for (std::size_t j = 0; j < 5; ++j) {
        Matrix up = u, um = u;
        up(k, j) += eps;
        um(k, j) -= eps;
        const double fd = (negative_sampling_loss(h, up) - negative_sampling_loss(h, um)) / (2 * eps);
        checks.expect(std::abs(fd - gu(k, j)) <= 1e-4 * std::max(std::abs(fd), 1e-3), "(a) target gradient");
      }
    }
  }
  // (b) pair corpus
  const std::size_t pairs = 50;
  std::vector<TokenStream> sentences;
  for (int s = 0; s < 10000; ++s) {
    const auto i = std::to_string(gen.index(pairs));
    sentences.push_back(tokenize("x" + i + " y" + i));
  }
  EmbeddingConfig config;
  config.dim = 50;
  config.min_count = 1;
  config.seed = 7;
  const double input_only = pair_margin(train_embeddings(sentences, config), pairs);
  config.add_context_vectors = true;
  const double with_context = pair_margin(train_embeddings(sentences, config), pairs);
  checks.expect(with_context >= 0.2, "(b) pair margin " + fmt(with_context));
  // (c) min_count
  std::vector<TokenStream> counted;
  for (int i = 0; i < 9; ++i) counted.push_back(tokenize("rare frequent"));
  counted.push_back(tokenize("frequent"));
  const auto vocab = build_vocab(counted, 10);
  checks.expect(!vocab.find("rare") && vocab.find("frequent"), "(c) min_count");
  // (d) round-trip
  const auto dir = harass::testing::scratch_dir("acceptance_embeddings");
  EmbeddingConfig small;
  small.dim = 16;
  small.min_count = 1;
  small.epochs = 1;
  const auto word = train_embeddings(sentences, small);
  word.save(dir / "w.vec");
  checks.expect(load_embeddings(dir / "w.vec") == word, "(d) word round-trip");
  small.subword = SubwordSettings{3, 6, 50000};
  const auto sub = train_embeddings(sentences, small);
  sub.save(dir / "f.vec");
  const auto back = load_embeddings(dir / "f.vec");
  checks.expect(back == sub && back.word_vector("x1q") == sub.word_vector("x1q"), "(d) subword round-trip");
  return checks.outcome("pair margin " + fmt(with_context) + " with context vectors, " + fmt(input_only) +
                        " input vectors only");
}

// ---------------------------------------------------------------------------
// 7. End-to-end pipeline

std::optional<nlohmann::json> read_metrics(const fs::path& p) {
  if (!fs::exists(p)) return std::nullopt;
  return nlohmann::json::parse(io::read_file(p));
}

Outcome end_to_end() {
  Checks checks;
  const auto dir = harass::testing::scratch_dir("acceptance_e2e");
  const std::string corpus = harass::testing::fixture("synthetic_240.csv").string();
  const std::string sentences = harass::testing::fixture("synthetic_sentences.txt").string();
  std::string err;
  const int combined = run_cli({"cv", "--corpus", corpus, "--out", (dir / "combined").string(), "--task", "combined",
                                "--spec", "F(S)+W(S)", "--emb-dim", "50", "--sentences", sentences, "--learner", "gbm",
                                "--seed", "1"},
                               &err);
  checks.expect(combined == 0, "combined cv exit " + std::to_string(combined) + " " + err);
  const int multi = run_cli({"cv", "--corpus", corpus, "--out", (dir / "multi").string(), "--task", "multiclass",
                             "--spec", "F(S)+W(S)", "--emb-fs", (dir / "combined" / "emb_fs.vec").string(),
                             "--emb-ws", (dir / "combined" / "emb_ws.vec").string(), "--learner", "gbm", "--seed",
                             "1"},
                            &err);
  checks.expect(multi == 0, "multiclass cv exit " + std::to_string(multi) + " " + err);
  double f = 0, macro = 0;
  if (const auto m = read_metrics(dir / "combined" / "metrics_combined.json")) {
    f = (*m)["mean"]["per_class"][0]["f_score"].get<double>();
  }
  if (const auto m = read_metrics(dir / "multi" / "metrics_multiclass.json")) {
    macro = (*m)["mean"]["macro"]["f_score"].get<double>();
  }
  checks.expect(f >= 0.80, "combined F " + fmt(f));
  checks.expect(macro >= 0.70, "multiclass macro F " + fmt(macro));
  if (fs::exists(dir / "multi" / "report_multiclass.md")) {
    const auto md = io::read_file(dir / "multi" / "report_multiclass.md");
    for (const auto& label : multiclass_label_space()) {
      checks.expect(md.find("| " + label + " |") != std::string::npos, "report row " + label);
    }
    checks.expect(md.find("| micro |") != std::string::npos && md.find("| macro |") != std::string::npos,
                  "micro/macro rows");
  } else {
    checks.expect(false, "multiclass report missing");
  }
  return checks.outcome("combined F " + fmt(f, 3) + ", multiclass macro F " + fmt(macro, 3));
}

// ---------------------------------------------------------------------------
// 8. Corpus-conditional

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

Outcome corpus_conditional() {
  const char* corpus = env("HARASS_CORPUS");
  if (!corpus) return {Outcome::Status::Skip, "HARASS_CORPUS not set"};
  Checks checks;
  const auto dir = harass::testing::scratch_dir("acceptance_corpus");
  std::vector<std::string> base = {"--corpus", corpus, "--spec", "F(S)+W(S)", "--learner", "gbm", "--seed", "1"};
  if (const char* s = env("HARASS_SENTENCES")) base.insert(base.end(), {"--sentences", s});
  if (const char* fs_path = env("HARASS_EMB_FS")) base.insert(base.end(), {"--emb-fs", fs_path});
  if (const char* ws_path = env("HARASS_EMB_WS")) base.insert(base.end(), {"--emb-ws", ws_path});
  if (const char* threads = env("HARASS_THREADS")) base.insert(base.end(), {"--threads", threads});
  std::string err;
  auto args = base;
  args.insert(args.begin(), "cv");
  auto combined = args;
  combined.insert(combined.end(), {"--task", "combined", "--out", (dir / "combined").string()});
  checks.expect(run_cli(combined, &err) == 0, "combined cv: " + err);
  auto multi = args;
  multi.insert(multi.end(), {"--task", "multiclass", "--out", (dir / "multi").string()});
  checks.expect(run_cli(multi, &err) == 0, "multiclass cv: " + err);
  double f = 0, spec = 0, micro = 0;
  if (const auto m = read_metrics(dir / "combined" / "metrics_combined.json")) {
    f = (*m)["mean"]["per_class"][0]["f_score"].get<double>();
    spec = (*m)["mean"]["specificity"].get<double>();
  }
  if (const auto m = read_metrics(dir / "multi" / "metrics_multiclass.json")) {
    micro = (*m)["mean"]["micro"]["f_score"].get<double>();
  }
  checks.expect(std::abs(f - 0.88) <= 0.05, "combined F " + fmt(f));
  checks.expect(std::abs(spec - 0.83) <= 0.07, "specificity " + fmt(spec));
  checks.expect(std::abs(micro - 0.92) <= 0.05, "micro F " + fmt(micro));
  std::string detail = "F " + fmt(f, 3) + ", specificity " + fmt(spec, 3) + ", micro F " + fmt(micro, 3);
  if (const char* lexicon = env("HARASS_LEXICON")) {
    const auto lex = load_lexicon(lexicon);
    const auto names = lex.category_names();
    const auto it = std::find_if(names.begin(), names.end(), [](std::string n) {
      std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
      return n == "negate" || n == "negation";
    });
    if (it != names.end()) {
      const auto table = effect_size_table(load_corpus(corpus, fs::path(corpus).extension() == ".tsv"
                                                                   ? CorpusFormat::Tsv
                                                                   : CorpusFormat::Csv),
                                           lex, {TypeColumn{HarassmentType::Appearance}});
      const auto row = std::find(table.features.begin(), table.features.end(), *it) - table.features.begin();
      const double e = table.values(std::size_t(row), 0);
      checks.expect(std::abs(e - 2.34) <= 0.05, "appearance negation effect " + fmt(e));
      detail += ", appearance negation effect " + fmt(e, 2);
    }
  }
  return checks.outcome(detail);
}

// ---------------------------------------------------------------------------
// 9. Determinism and persistence

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  }
  return files;
}

Outcome determinism() {
  Checks checks;
  const auto root = harass::testing::scratch_dir("acceptance_replay");
  const std::string mini = harass::testing::fixture("mini_corpus.csv").string();
  const std::string corpus = harass::testing::fixture("synthetic_240.csv").string();
  const std::string sentences = harass::testing::fixture("synthetic_sentences.txt").string();
  const std::string lexicon = harass::testing::fixture("six_category_lexicon.txt").string();
  const std::string stoplist = harass::testing::data_file("stopwords.txt").string();
  const std::vector<std::string> emb = {"--sentences", sentences, "--emb-dim", "20", "--emb-epochs", "2"};
  const auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  // Later commands read artifacts written by the first replay of earlier ones.
  const fs::path first = root / "a";
  const std::vector<std::pair<std::string, std::vector<std::string>>> commands = {
      {"stats", {"stats", "--corpus", mini}},
      {"kappa", {"kappa", "--corpus", mini}},
      {"analyze", {"analyze", "--corpus", corpus, "--lexicon", lexicon, "--stoplist", stoplist, "--prune"}},
      {"freq", {"freq", "--corpus", corpus, "--stoplist", stoplist}},
      {"embed-train", with({"embed-train", "--mode", "cbow", "--seed", "4"}, emb)},
      {"embed-subword", with({"embed-train", "--subword", "--seed", "4"}, emb)},
      {"project2d", {"project2d", "--embeddings", (first / "embed-train" / "embeddings.vec").string(), "--top", "15"}},
      {"vectorize", with({"vectorize", "--corpus", corpus, "--spec", "T+L+W(C)", "--lexicon", lexicon, "--format",
                          "binary", "--seed", "2"},
                         emb)},
      {"train", with({"train", "--corpus", corpus, "--spec", "F(S)+W(S)+L+T", "--lexicon", lexicon, "--task",
                      "multiclass", "--trees", "20", "--seed", "5"},
                     emb)},
      {"cv", with({"cv", "--corpus", corpus, "--spec", "W(S)+T", "--task", "per-type", "--folds", "3", "--repeats",
                   "2", "--learner", "linear_svm", "--seed", "6"},
                  emb)},
      {"cv-threads", {"cv", "--corpus", corpus, "--spec", "T", "--task", "combined", "--folds", "4", "--repeats", "2",
                      "--threads", "4", "--trees", "10", "--seed", "6"}},
      {"predict", {"predict", "--model", (first / "train" / "model.json").string(), "--corpus", corpus}},
      {"transfer", {"transfer", "--model", (first / "train" / "model.json").string(), "--corpus", corpus}},
      {"report", {"report", "--input", (first / "cv" / "metrics_sexual.json").string(), "--input",
                  (first / "cv" / "metrics_political.json").string(), "--format", "csv"}},
  };
  std::size_t replayed = 0;
  for (const auto& [name, args] : commands) {
    std::vector<std::map<std::string, std::string>> runs;
    for (const char* replay : {"a", "b"}) {
      const fs::path out = root / replay / name;
      std::string err;
      const int code = run_cli(with(args, {"--out", out.string()}), &err);
      checks.expect(code == 0, name + " exit " + std::to_string(code) + " " + err);
      runs.push_back(fs::exists(out) ? snapshot(out) : std::map<std::string, std::string>{});
    }
    checks.expect(!runs[0].empty() && runs[0] == runs[1], name + " replay differs");
    ++replayed;
  }

  // Save/load of every learner reproduces predictions on random inputs.
  Gen gen(909);
  const std::size_t n = 120, d = 6;
  std::vector<int> y(n);
  Matrix x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = int(i % 3);
    for (std::size_t j = 0; j < d; ++j) x(i, j) = std::max(0.0, gen.normal(2.0 + y[i] * (j % 3 == y[i]), 1.0));
  }
  Matrix inputs(100, d);
  for (auto& v : inputs.data()) v = gen.real(0, 5);
  for (auto kind : {LearnerKind::NbMultinomial, LearnerKind::NbGaussian, LearnerKind::Knn, LearnerKind::LinearSvm,
                    LearnerKind::Gbm}) {
    LearnerConfig config;
    config.kind = kind;
    config.seed = 3;
    config.gbm.subsample = 0.8;
    config.gbm.seed = 3;
    const auto model = train_model(config, x, y, class_names(3));
    save_model(model, root / "model.json");
    const auto loaded = load_model(root / "model.json");
    const auto a = predict(model, inputs), b = predict(loaded, inputs);
    checks.expect(a.labels == b.labels && a.scores == b.scores, std::string(to_string(kind)) + " persistence");
  }
  return checks.outcome(std::to_string(replayed) + " command replays, 5 learners persisted");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "metric oracle equivalence", 10, metric_oracle},
      {2, "effect-size oracle", 60, effect_size_oracle},
      {3, "TF-IDF oracle", 60, tfidf_oracle},
      {4, "NB/KNN oracles", 30, nb_knn_oracle},
      {5, "GBM behavioral suite", 120, gbm_suite},
      {6, "embedding suite", 180, embedding_suite},
      {7, "end-to-end pipeline", 300, end_to_end},
      {8, "corpus-conditional", 1e9, corpus_conditional},
      {9, "determinism and persistence", 600, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {Outcome::Status::Fail, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (outcome.status == Outcome::Status::Pass && seconds > c.budget_seconds) {
      outcome = {Outcome::Status::Fail, "over the " + fmt(c.budget_seconds, 0) + " s budget | " + outcome.detail};
    }
    const char* tag = outcome.status == Outcome::Status::Pass   ? "PASS"
                      : outcome.status == Outcome::Status::Skip ? "SKIP"
                                                                : "FAIL";
    failed += outcome.status == Outcome::Status::Fail;
    std::cout << tag << " " << c.id << " " << c.name << ": " << outcome.detail << " (" << fmt(seconds, 1) << " s)"
              << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
