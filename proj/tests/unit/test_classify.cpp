#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "harass/classify.hpp"
#include "harass/error.hpp"
#include "test_support.hpp"

using namespace harass;

namespace {

const std::vector<std::string> kAB = {"A", "B"};

std::vector<std::string> names(std::size_t k) {
  std::vector<std::string> out;
  for (std::size_t c = 0; c < k; ++c) out.push_back("c" + std::to_string(c));
  return out;
}

// Labels with every class present at least once.
std::vector<int> random_labels(testing::Gen& gen, std::size_t n, std::size_t k) {
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = i < k ? static_cast<int>(i) : static_cast<int>(gen.index(k));
  std::shuffle(y.begin(), y.end(), gen.engine());
  return y;
}

// Class c is centered on a circle of radius 3 in the first two dimensions.
Matrix gaussian_blobs(testing::Gen& gen, std::span<const int> y, std::size_t d, double spread) {
  const int k = *std::max_element(y.begin(), y.end()) + 1;
  Matrix x(y.size(), d);
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double angle = 6.283185307179586 * y[i] / k;
    for (std::size_t j = 0; j < d; ++j) {
      const double center = j == 0 ? 3 * std::cos(angle) : j == 1 ? 3 * std::sin(angle) : 0.0;
      x(i, j) = gen.normal(center, spread);
    }
  }
  return x;
}

struct XorData {
  Matrix x;
  std::vector<int> y;
};

XorData xor_data(std::uint64_t seed) {
  testing::Gen gen(seed);
  XorData d{Matrix(200, 2), {}};
  const double centers[4][2] = {{0, 0}, {1, 1}, {0, 1}, {1, 0}};
  for (std::size_t i = 0; i < 200; ++i) {
    const std::size_t q = i / 50;
    d.x(i, 0) = centers[q][0] + gen.normal(0, 0.1);
    d.x(i, 1) = centers[q][1] + gen.normal(0, 0.1);
    d.y.push_back(q < 2 ? 0 : 1);
  }
  return d;
}

double accuracy(std::span<const int> a, std::span<const int> b) {
  std::size_t hit = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i];
  return static_cast<double>(hit) / static_cast<double>(a.size());
}

}  // namespace

TEST_CASE("learner names") {
  for (auto k : {LearnerKind::NbMultinomial, LearnerKind::NbGaussian, LearnerKind::Knn, LearnerKind::LinearSvm,
                 LearnerKind::Gbm}) {
    CHECK(parse_learner_kind(to_string(k)) == k);
  }
  CHECK_THROWS_AS(parse_learner_kind("forest"), Error);
  CHECK(parse_knn_metric("cosine") == KnnMetric::Cosine);
}

TEST_CASE("training input errors") {
  Matrix x(3, 2, 1.0);
  const std::vector<int> one = {0, 0, 0};
  CHECK_THROWS_AS(train_gbm(x, one, kAB), Error);
  const std::vector<int> short_y = {0, 1};
  CHECK_THROWS_AS(train_nb(x, short_y, kAB), Error);
  const std::vector<int> bad = {0, 1, 2};
  CHECK_THROWS_AS(train_knn(x, bad, kAB, 1), Error);
  const std::vector<int> y = {0, 1, 0};
  CHECK_THROWS_AS(train_knn(x, y, kAB, 4), Error);
  Matrix neg(3, 2, -1.0);
  CHECK_THROWS_AS(train_nb(neg, y, kAB), Error);
  Matrix nan(3, 2, std::nan(""));
  CHECK_THROWS_AS(train_svm(nan, y, kAB), Error);
  const auto m = train_nb(x, y, kAB);
  CHECK_THROWS_AS(predict(m, Matrix(1, 3)), Error);
}

TEST_CASE("multinomial NB smoothed estimate") {
  // Columns are counts of x and y: class A has "x x", class B has "y".
  Matrix x(2, 2);
  x(0, 0) = 2;
  x(1, 1) = 1;
  const std::vector<int> y = {0, 1};
  const auto m = train_nb(x, y, kAB);
  const auto& p = std::get<NbMultinomialParams>(m.params);
  CHECK(std::exp(p.log_likelihood(0, 0)) == doctest::Approx(0.75));
  CHECK(std::exp(p.log_likelihood(0, 1)) == doctest::Approx(0.25));
}

TEST_CASE("multinomial NB matches brute-force Bayes") {
  testing::Gen gen(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + gen.index(19), d = 1 + gen.index(10), k = 2 + gen.index(std::min<std::size_t>(n - 1, 4));
    const auto y = random_labels(gen, n, k);
    Matrix x(n, d);
    for (auto& v : x.data()) v = static_cast<double>(gen.index(4));
    const double alpha = gen.coin() ? 1.0 : gen.real(0.1, 2.0);
    const auto m = train_nb(x, y, names(k), LearnerKind::NbMultinomial, alpha);
    Matrix q(5, d);
    for (auto& v : q.data()) v = static_cast<double>(gen.index(5));
    const auto pred = predict(m, q);
    for (std::size_t r = 0; r < q.rows(); ++r) {
      std::vector<double> joint(k);
      for (std::size_t c = 0; c < k; ++c) {
        double prior = 0, total = 0;
        std::vector<double> count(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
          if (y[i] != static_cast<int>(c)) continue;
          prior += 1;
          for (std::size_t j = 0; j < d; ++j) count[j] += x(i, j);
        }
        for (double v : count) total += v;
        double logp = std::log(prior / n);
        for (std::size_t j = 0; j < d; ++j) logp += q(r, j) * std::log((count[j] + alpha) / (total + alpha * d));
        joint[c] = logp;
      }
      const double top = *std::max_element(joint.begin(), joint.end());
      double z = 0;
      for (double v : joint) z += std::exp(v - top);
      double sum = 0;
      for (std::size_t c = 0; c < k; ++c) {
        const double expected = std::exp(joint[c] - top) / z;
        CHECK(std::abs(pred.scores(r, c) - expected) <= 1e-10 * std::max(expected, 1e-300));
        sum += pred.scores(r, c);
      }
      CHECK(std::abs(sum - 1.0) <= 1e-12);
    }
  }
}

TEST_CASE("gaussian NB") {
  testing::Gen gen(12);
  const auto y = random_labels(gen, 60, 2);
  const auto x = gaussian_blobs(gen, y, 3, 0.3);
  const auto m = train_nb(x, y, kAB, LearnerKind::NbGaussian);
  CHECK(accuracy(predict(m, x).labels, y) == 1.0);
  // Identical class distributions with equal priors give 0.5/0.5.
  Matrix same(4, 1);
  same(0, 0) = same(2, 0) = 1;
  same(1, 0) = same(3, 0) = 3;
  const std::vector<int> yy = {0, 0, 1, 1};
  const auto sym = predict(train_nb(same, yy, kAB, LearnerKind::NbGaussian), same);
  for (double v : sym.scores.data()) CHECK(v == doctest::Approx(0.5));
}

TEST_CASE("knn examples") {
  Matrix line(5, 1);
  for (std::size_t i = 0; i < 5; ++i) line(i, 0) = static_cast<double>(i);
  const std::vector<int> y = {0, 0, 0, 1, 1};
  Matrix q(1, 1);
  q(0, 0) = 1.0;
  CHECK(predict(train_knn(line, y, kAB, 3), q).labels[0] == 0);
  q(0, 0) = 4.0;
  CHECK(predict(train_knn(line, y, kAB, 1), q).labels[0] == 1);
  CHECK(predict(train_knn(line, y, kAB, 5), q).labels[0] == 0);
}

TEST_CASE("knn matches exhaustive distance sort") {
  testing::Gen gen(13);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + gen.index(200), d = 2 + gen.index(5), k = 2 + gen.index(3);
    const auto y = random_labels(gen, n, k);
    Matrix x(n, d);
    // Grid values make Euclidean distance ties common; cosine ties between
    // parallel or one-dimensional vectors depend on rounding, so cosine uses
    // real values in two or more dimensions.
    const auto metric = gen.coin() ? KnnMetric::Euclidean : KnnMetric::Cosine;
    auto draw = [&] { return metric == KnnMetric::Euclidean ? static_cast<double>(gen.integer(-3, 3)) : gen.real(-1, 1); };
    for (auto& v : x.data()) v = draw();
    const std::size_t kk = 1 + gen.index(std::min<std::size_t>(n, 15));
    const auto m = train_knn(x, y, names(k), kk, metric);
    Matrix q(10, d);
    for (auto& v : q.data()) v = draw();
    const auto pred = predict(m, q);
    for (std::size_t r = 0; r < q.rows(); ++r) {
      std::vector<std::pair<double, std::size_t>> all;
      for (std::size_t i = 0; i < n; ++i) {
        double dist = 0;
        if (metric == KnnMetric::Euclidean) {
          for (std::size_t j = 0; j < d; ++j) dist += (q(r, j) - x(i, j)) * (q(r, j) - x(i, j));
          dist = std::sqrt(dist);
        } else {
          double ab = 0, aa = 0, bb = 0;
          for (std::size_t j = 0; j < d; ++j) {
            ab += q(r, j) * x(i, j);
            aa += q(r, j) * q(r, j);
            bb += x(i, j) * x(i, j);
          }
          dist = aa == 0 || bb == 0 ? 1.0 : 1.0 - ab / std::sqrt(aa * bb);
        }
        all.push_back({dist, i});
      }
      std::sort(all.begin(), all.end());
      std::vector<int> votes(k, 0);
      for (std::size_t i = 0; i < kk; ++i) ++votes[y[all[i].second]];
      const int expected = static_cast<int>(std::max_element(votes.begin(), votes.end()) - votes.begin());
      CHECK(pred.labels[r] == expected);
      for (std::size_t c = 0; c < k; ++c) CHECK(pred.scores(r, c) == doctest::Approx(votes[c] / double(kk)));
    }
  }
}

TEST_CASE("svm subgradient matches finite differences") {
  testing::Gen gen(14);
  int checked = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + gen.index(20), d = 1 + gen.index(5);
    const Matrix x = gen.matrix(n, d, -2, 2);
    std::vector<int> ypm(n);
    for (auto& v : ypm) v = gen.coin() ? 1 : -1;
    const auto w = gen.reals(d, -1, 1);
    const double b = gen.real(-1, 1), lambda = gen.real(0.01, 1.0);
    bool near_kink = false;
    for (std::size_t i = 0; i < n; ++i) near_kink |= std::abs(1.0 - ypm[i] * (dot(w, x.row(i)) + b)) < 1e-3;
    if (near_kink) continue;
    ++checked;
    std::vector<double> grad(d + 1);
    svm_subgradient(w, b, x, ypm, lambda, grad);
    const double eps = 1e-6;
    for (std::size_t j = 0; j <= d; ++j) {
      auto wp = w, wm = w;
      double bp = b, bm = b;
      if (j < d) {
        wp[j] += eps;
        wm[j] -= eps;
      } else {
        bp += eps;
        bm -= eps;
      }
      const double fd = (svm_objective(wp, bp, x, ypm, lambda) - svm_objective(wm, bm, x, ypm, lambda)) / (2 * eps);
      CHECK(std::abs(fd - grad[j]) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
  CHECK(checked >= 50);
}

TEST_CASE("svm on separable data and regularization") {
  testing::Gen gen(15);
  Matrix x(80, 2);
  std::vector<int> y(80);
  for (std::size_t i = 0; i < 80; ++i) {
    y[i] = static_cast<int>(i % 2);
    const double side = y[i] ? 1.0 : -1.0;
    x(i, 0) = side * gen.real(1.0, 3.0);
    x(i, 1) = gen.real(-3, 3);
  }
  const auto m = train_svm(x, y, kAB, 1e-3, 50, 1);
  CHECK(accuracy(predict(m, x).labels, y) == 1.0);

  auto norm = [](const TrainedModel& t) {
    const auto& p = std::get<SvmParams>(t.params);
    return std::sqrt(dot(p.weights.row(0), p.weights.row(0)) + p.bias[0] * p.bias[0]);
  };
  for (double lambda : {1e-3, 1e-2, 1e-1, 1.0}) {
    const auto t = train_svm(x, y, kAB, lambda, 20, 2);
    CHECK(norm(t) <= 1.0 / std::sqrt(lambda) + 1e-12);
    const auto stronger = train_svm(x, y, kAB, lambda * 10, 20, 2);
    CHECK(norm(stronger) < norm(t));
  }

  Matrix flat(10, 2, 1.0);
  std::vector<int> yy = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const auto pred = predict(train_svm(flat, yy, kAB), flat);
  CHECK(std::adjacent_find(pred.labels.begin(), pred.labels.end(), std::not_equal_to<>()) == pred.labels.end());
  CHECK(accuracy(pred.labels, yy) == 0.5);
}

TEST_CASE("multi-class svm one-vs-rest") {
  testing::Gen gen(16);
  const auto y = random_labels(gen, 90, 3);
  const auto x = gaussian_blobs(gen, y, 2, 0.2);
  const auto m = train_svm(x, y, names(3), 1e-3, 30, 3);
  CHECK(std::get<SvmParams>(m.params).weights.rows() == 3);
  CHECK(accuracy(predict(m, x).labels, y) >= 0.95);
}

TEST_CASE("friedman improvement") {
  CHECK(friedman_improvement(2.0, 2, -2.0, 2) == doctest::Approx(4.0));
  CHECK(friedman_improvement(3.0, 3, 3.0, 3) == 0.0);
}

TEST_CASE("best split matches exhaustive search") {
  testing::Gen gen(17);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + gen.index(199), d = 1 + gen.index(4);
    Matrix x(n, d);
    for (auto& v : x.data()) v = gen.coin(0.5) ? static_cast<double>(gen.integer(0, 5)) : gen.real(-1, 1);
    const auto target = gen.reals(n, -1, 1);
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i) {
      if (gen.coin(0.8)) rows.push_back(i);
    }
    if (rows.empty()) continue;
    const std::size_t min_leaf = 1 + gen.index(3);

    struct Cand {
      std::size_t f;
      double thr, gain;
    };
    std::vector<Cand> cands;
    for (std::size_t f = 0; f < d; ++f) {
      std::vector<double> values;
      for (auto r : rows) values.push_back(x(r, f));
      std::sort(values.begin(), values.end());
      values.erase(std::unique(values.begin(), values.end()), values.end());
      for (std::size_t i = 0; i + 1 < values.size(); ++i) {
        const double thr = values[i] + (values[i + 1] - values[i]) / 2;
        double sl = 0, sr = 0;
        std::size_t nl = 0, nr = 0;
        for (auto r : rows) {
          if (x(r, f) <= values[i]) {
            sl += target[r];
            ++nl;
          } else {
            sr += target[r];
            ++nr;
          }
        }
        if (nl < min_leaf || nr < min_leaf) continue;
        const double gain = double(nl) * double(nr) / double(nl + nr) * std::pow(sl / nl - sr / nr, 2);
        if (gain > 0) cands.push_back({f, thr, gain});
      }
    }
    const auto got = best_split(x, target, rows, min_leaf);
    if (cands.empty()) {
      CHECK_FALSE(got.has_value());
      continue;
    }
    REQUIRE(got.has_value());
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) { return a.gain > b.gain; });
    CHECK(got->improvement == doctest::Approx(cands[0].gain).epsilon(1e-9));
    CHECK(got->improvement >= 0.0);
    if (cands.size() == 1 || cands[1].gain < cands[0].gain * (1 - 1e-9)) {
      CHECK(got->feature == cands[0].f);
      CHECK(got->threshold == doctest::Approx(cands[0].thr).epsilon(1e-15));
    }
  }
}

TEST_CASE("regression tree respects depth and leaf size") {
  testing::Gen gen(18);
  const Matrix x = gen.matrix(100, 3, 0, 1);
  const auto target = gen.reals(100, -1, 1);
  std::vector<std::size_t> rows(100);
  std::iota(rows.begin(), rows.end(), 0);
  GbmConfig c;
  c.max_depth = 2;
  c.min_samples_leaf = 10;
  std::vector<std::size_t> leaf_sizes;
  const auto tree = fit_regression_tree(x, target, rows, c, [&](std::span<const std::size_t> r) {
    leaf_sizes.push_back(r.size());
    return static_cast<double>(r.size());
  });
  CHECK(tree.depth() <= 2);
  for (auto s : leaf_sizes) CHECK(s >= 10);
  CHECK(std::accumulate(leaf_sizes.begin(), leaf_sizes.end(), std::size_t{0}) == 100);
  for (std::size_t i = 0; i < 100; ++i) CHECK(tree.predict(x.row(i)) >= 10.0);
}

TEST_CASE("gbm staged loss never rises") {
  testing::Gen gen(19);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 20 + gen.index(100), d = 1 + gen.index(5);
    const std::size_t k = trial % 4 == 3 ? 3 : 2;
    const auto y = random_labels(gen, n, k);
    const Matrix x = gaussian_blobs(gen, y, d, 1.5);
    GbmConfig c;
    c.n_trees = 30;
    c.max_depth = 1 + gen.index(3);
    c.seed = trial;
    const auto m = train_gbm(x, y, names(k), c);
    const auto& loss = std::get<GbmParams>(m.params).staged_loss;
    REQUIRE(loss.size() == c.n_trees + 1);
    for (std::size_t s = 1; s < loss.size(); ++s) CHECK(loss[s] <= loss[s - 1] + 1e-9);
  }
}

TEST_CASE("gbm staged loss never rises on pure noise") {
  testing::Gen gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 10 + gen.index(60), k = 2 + gen.index(2);
    const auto y = random_labels(gen, n, k);
    const Matrix x = gen.matrix(n, 1 + gen.index(4), -1, 1);
    GbmConfig c;
    c.n_trees = 150;
    c.max_depth = 4;
    c.learning_rate = 1.0;
    const auto m = train_gbm(x, y, names(k), c);
    const auto& loss = std::get<GbmParams>(m.params).staged_loss;
    for (std::size_t s = 1; s < loss.size(); ++s) CHECK(loss[s] <= loss[s - 1]);
  }
}

TEST_CASE("gbm initial score and range") {
  Matrix x(10, 1);
  std::vector<int> y(10, 0);
  for (std::size_t i = 0; i < 10; ++i) x(i, 0) = static_cast<double>(i);
  y[9] = y[8] = y[7] = 1;
  GbmConfig c;
  c.n_trees = 5;
  const auto m = train_gbm(x, y, kAB, c);
  const auto& p = std::get<GbmParams>(m.params);
  CHECK(p.initial_scores[0] == doctest::Approx(std::log(0.3 / 0.7)));
  const double p0 = 0.3;
  CHECK(p.staged_loss[0] == doctest::Approx(-(p0 * std::log(p0) + (1 - p0) * std::log(1 - p0))));
  const auto pred = predict(m, x);
  for (double v : pred.scores.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("gbm learns xor with the published settings") {
  const auto d = xor_data(20);
  const auto m = train_gbm(d.x, d.y, kAB, GbmConfig{});
  CHECK(accuracy(predict(m, d.x).labels, d.y) >= 0.95);
}

TEST_CASE("gbm is bit-reproducible") {
  const auto d = xor_data(21);
  for (double subsample : {1.0, 0.6}) {
    GbmConfig c;
    c.n_trees = 30;
    c.subsample = subsample;
    c.seed = 5;
    const auto a = train_gbm(d.x, d.y, kAB, c);
    const auto b = train_gbm(d.x, d.y, kAB, c);
    CHECK(model_to_json(a) == model_to_json(b));
    CHECK(predict(a, d.x).scores == predict(b, d.x).scores);
  }
}

TEST_CASE("multi-class gbm") {
  testing::Gen gen(22);
  const auto y = random_labels(gen, 150, 3);
  const auto x = gaussian_blobs(gen, y, 2, 0.3);
  GbmConfig c;
  c.n_trees = 30;
  const auto m = train_gbm(x, y, names(3), c);
  const auto& p = std::get<GbmParams>(m.params);
  CHECK(p.initial_scores.size() == 3);
  CHECK(p.stages.front().size() == 3);
  const auto pred = predict(m, x);
  CHECK(accuracy(pred.labels, y) >= 0.95);
  for (std::size_t r = 0; r < pred.scores.rows(); ++r) {
    const auto row = pred.scores.row(r);
    CHECK(std::accumulate(row.begin(), row.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("model json round-trip is bit-exact") {
  testing::Gen gen(23);
  const auto dir = testing::scratch_dir("classify_models");
  const auto y = random_labels(gen, 60, 3);
  Matrix x = gaussian_blobs(gen, y, 4, 1.0);
  for (auto& v : x.data()) v = std::max(0.0, v + 8.0);
  std::vector<LearnerConfig> configs(5);
  configs[0].kind = LearnerKind::NbMultinomial;
  configs[1].kind = LearnerKind::NbGaussian;
  configs[2].kind = LearnerKind::Knn;
  configs[3].kind = LearnerKind::LinearSvm;
  configs[4].kind = LearnerKind::Gbm;
  configs[4].gbm.n_trees = 20;
  Matrix queries = gen.matrix(100, 4, 4, 12);
  for (const auto& c : configs) {
    const auto m = train_model(c, x, y, names(3));
    save_model(m, dir / "m.json");
    const auto back = load_model(dir / "m.json");
    CHECK(back.kind == m.kind);
    CHECK(back.label_space == m.label_space);
    CHECK(model_to_json(back) == model_to_json(m));
    const auto a = predict(m, queries), b = predict(back, queries);
    CHECK(a.labels == b.labels);
    CHECK(a.scores == b.scores);
  }
  io::write_file(dir / "bad.json", R"({"format":"something-else","version":1})");
  CHECK_THROWS_AS(load_model(dir / "bad.json"), Error);
}

TEST_CASE("relabeling classes permutes outputs") {
  testing::Gen gen(24);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t k = 2 + gen.index(3);
    const auto y = random_labels(gen, 60, k);
    Matrix x = gaussian_blobs(gen, y, 3, 1.0);
    for (auto& v : x.data()) v = std::max(0.0, v + 8.0);
    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen.engine());
    std::vector<int> y2(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) y2[i] = perm[y[i]];
    auto labels = names(k), labels2 = labels;
    for (std::size_t c = 0; c < k; ++c) labels2[perm[c]] = labels[c];
    const Matrix q = gen.matrix(20, 3, 4, 12);
    for (auto kind : {LearnerKind::NbMultinomial, LearnerKind::NbGaussian, LearnerKind::Knn, LearnerKind::LinearSvm,
                      LearnerKind::Gbm}) {
      LearnerConfig c;
      c.kind = kind;
      c.gbm.n_trees = 10;
      c.seed = 3;
      const auto a = predict(train_model(c, x, y, labels), q);
      const auto b = predict(train_model(c, x, y2, labels2), q);
      for (std::size_t r = 0; r < q.rows(); ++r) {
        for (std::size_t cc = 0; cc < k; ++cc) {
          INFO(to_string(kind));
          CHECK(b.scores(r, perm[cc]) == doctest::Approx(a.scores(r, cc)).epsilon(1e-9).scale(1.0));
        }
        const auto row = a.scores.row(r);
        const double top = *std::max_element(row.begin(), row.end());
        if (std::count_if(row.begin(), row.end(), [&](double v) { return std::abs(v - top) < 1e-9; }) == 1) {
          CHECK(b.labels[r] == perm[a.labels[r]]);
        }
      }
    }
  }
}
