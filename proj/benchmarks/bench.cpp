#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "tokenlens/embedding.hpp"
#include "tokenlens/merge_training.hpp"
#include "tokenlens/premium.hpp"
#include "tokenlens/tokenizer.hpp"

namespace {

using namespace tokenlens;

Corpus synthetic_corpus(std::size_t docs, std::size_t len) {
  static const std::vector<std::string> alphabet{"a", "e", "i", "n", "r", "s", "t", " ", "क", "ा", "न"};
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  Corpus c;
  for (std::size_t d = 0; d < docs; ++d) {
    std::string s;
    for (std::size_t i = 0; i < len; ++i) s += alphabet[pick(rng)];
    c.documents.push_back(std::move(s));
  }
  return c;
}

void BM_BpeTrain(benchmark::State& state) {
  const Corpus c = synthetic_corpus(static_cast<std::size_t>(state.range(0)), 80);
  for (auto _ : state) benchmark::DoNotOptimize(bpe_train(c, MaxMerges{200}, {static_cast<unsigned>(state.range(1))}));
}
BENCHMARK(BM_BpeTrain)->Args({200, 1})->Args({200, 4})->Unit(benchmark::kMillisecond);

void BM_BpeEncode(benchmark::State& state) {
  const Corpus c = synthetic_corpus(200, 80);
  const TrainResult r = bpe_train(c, MaxMerges{500});
  const BpeEncoder enc(r.model.vocab, r.model.merges);
  std::size_t bytes = 0;
  for (auto _ : state) {
    for (const auto& d : c.documents) {
      benchmark::DoNotOptimize(enc.encode(d));
      bytes += d.size();
    }
  }
  state.SetBytesProcessed(static_cast<std::int64_t>(bytes));
}
BENCHMARK(BM_BpeEncode);

void BM_Premium(benchmark::State& state) {
  const Corpus en = synthetic_corpus(997, 60);
  const Corpus xx = synthetic_corpus(997, 90);
  const TrainResult r = bpe_train(en, MaxMerges{300});
  const TokenizerHandle tok =
      make_bpe_tokenizer("bpe", std::make_shared<const BpeEncoder>(r.model.vocab, r.model.merges));
  const ParallelCorpus pc = make_parallel_corpus(en.documents, xx.documents, "xxx", "Latn");
  for (auto _ : state) benchmark::DoNotOptimize(premium(tok, pc, {static_cast<unsigned>(state.range(0))}));
}
BENCHMARK(BM_Premium)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_NearestRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const EmbeddingMatrix m = EmbeddingMatrix::random(n, 64, 3);
  const Vector q = m.row(n / 2) * 0.5 + m.row(1) * 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(nearest_rows(q, m, 10));
}
BENCHMARK(BM_NearestRows)->Arg(10000)->Arg(50000);

void BM_FitAffine(benchmark::State& state) {
  const EmbeddingMatrix x = EmbeddingMatrix::random(static_cast<std::size_t>(state.range(0)), 64, 4);
  const EmbeddingMatrix y = EmbeddingMatrix::random(static_cast<std::size_t>(state.range(0)), 64, 5);
  for (auto _ : state) benchmark::DoNotOptimize(fit_affine(x, y));
}
BENCHMARK(BM_FitAffine)->Arg(10000)->Arg(50000)->Unit(benchmark::kMillisecond);

void BM_LocalLinreg(benchmark::State& state) {
  const EmbeddingMatrix v0 = EmbeddingMatrix::random(20000, 64, 6);
  const HiddenMatrix vl{1, EmbeddingMatrix::random(20000, 64, 7)};
  const Vector h = vl.rows.row(3);
  for (auto _ : state) benchmark::DoNotOptimize(derive_local_linreg(h, v0, vl, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_LocalLinreg)->Arg(16)->Arg(128);

}  // namespace
BENCHMARK_MAIN();
