#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "harass/classify.hpp"
#include "harass/corpus.hpp"
#include "harass/embeddings.hpp"
#include "harass/io.hpp"
#include "harass/text.hpp"
#include "harass/vectorize.hpp"

using namespace harass;

namespace {

const Corpus& fixture_corpus() {
  static const Corpus corpus = load_corpus(HARASS_FIXTURE_DIR "/synthetic_240.csv", CorpusFormat::Csv);
  return corpus;
}

std::vector<TokenStream> fixture_sentences() {
  std::vector<TokenStream> out;
  const auto text = io::read_file(HARASS_FIXTURE_DIR "/synthetic_sentences.txt");
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = std::min(text.find('\n', start), text.size());
    out.push_back(tokenize(std::string_view(text).substr(start, end - start)));
    start = end + 1;
  }
  return out;
}

void BM_Tokenize(benchmark::State& state) {
  const auto& corpus = fixture_corpus();
  std::size_t bytes = 0;
  for (auto _ : state) {
    for (const auto& t : corpus) {
      benchmark::DoNotOptimize(tokenize(t.text));
      bytes += t.text.size();
    }
  }
  state.SetBytesProcessed(static_cast<int64_t>(bytes));
}
BENCHMARK(BM_Tokenize);

void BM_TfidfFitTransform(benchmark::State& state) {
  const auto docs = tokenize_corpus(fixture_corpus());
  for (auto _ : state) {
    const auto model = fit_tfidf(docs);
    for (const auto& d : docs) benchmark::DoNotOptimize(model.transform(d));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(docs.size()));
}
BENCHMARK(BM_TfidfFitTransform);

void BM_GbmFit(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(n, 20);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = static_cast<int>(i % 2);
    for (std::size_t j = 0; j < 20; ++j) x(i, j) = noise(rng) + (j < 5 ? y[i] : 0);
  }
  for (auto _ : state) benchmark::DoNotOptimize(train_gbm(x, y, {"no", "yes"}, GbmConfig{}));
}
BENCHMARK(BM_GbmFit)->Arg(240)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_EmbeddingEpoch(benchmark::State& state) {
  const auto sentences = fixture_sentences();
  EmbeddingConfig config;
  config.dim = 50;
  config.epochs = 1;
  config.min_count = 1;
  if (state.range(0)) config.subword = SubwordSettings{3, 6, 50000};
  TrainingReport report;
  for (auto _ : state) benchmark::DoNotOptimize(train_embeddings(sentences, config, &report));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(report.processed_tokens));
}
BENCHMARK(BM_EmbeddingEpoch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
