// Microbenchmarks for the primitives that dominate a chain cycle: modular
// exponentiation, hashing, multiplication, and the full link cycle itself.
// The `cke bench` subcommand remains the reference timing path; these exist
// to localize regressions when it slows down.

#include <benchmark/benchmark.h>

#include "cke/digest.hpp"
#include "cke/groups.hpp"
#include "cke/harness.hpp"
#include "cke/nat.hpp"
#include "cke/protocol.hpp"
#include "cke/rng.hpp"
#include "cke/sha512.hpp"

namespace {

using namespace cke;

DomainParams group_for_bits(int bits) {
    return builtin_group(bits == 2048 ? "bench2048" : "bench1024");
}

void bm_modpow(benchmark::State& state) {
    DomainParams params = group_for_bits(static_cast<int>(state.range(0)));
    Rng rng(42);
    Nat base = rand_below(rng, params.p - Nat(1));
    Nat exponent = rand_below(rng, params.p - Nat(1));
    for (auto _ : state) {
        Nat r = modpow(base, exponent, params.p);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(bm_modpow)->Arg(1024)->Arg(2048)->Unit(benchmark::kMillisecond);

void bm_mul(benchmark::State& state) {
    Rng rng(43);
    DomainParams params = group_for_bits(static_cast<int>(state.range(0)));
    Nat a = rand_below(rng, params.p - Nat(1));
    Nat b = rand_below(rng, params.p - Nat(1));
    for (auto _ : state) {
        Nat r = a * b;
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(bm_mul)->Arg(1024)->Arg(2048);

void bm_sha512_4k(benchmark::State& state) {
    std::vector<std::uint8_t> buf(4096, 0xa5);
    for (auto _ : state) {
        auto d = sha512(buf);
        benchmark::DoNotOptimize(d);
    }
}
BENCHMARK(bm_sha512_4k);

void bm_kdf(benchmark::State& state) {
    DomainParams params = group_for_bits(static_cast<int>(state.range(0)));
    Rng rng(44);
    Nat key = rand_below(rng, params.p - Nat(1));
    for (auto _ : state) {
        Nat r = kdf(key, "chain", params.n);
        benchmark::DoNotOptimize(r);
    }
}
BENCHMARK(bm_kdf)->Arg(1024)->Arg(2048);

void bm_group_validation(benchmark::State& state) {
    DomainParams params = group_for_bits(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        auto check = validate_group(params);
        benchmark::DoNotOptimize(check);
    }
}
BENCHMARK(bm_group_validation)->Arg(1024)->Arg(2048)->Unit(benchmark::kMillisecond);

// Whole-cycle timing through the same path as `cke bench`, amortized over
// the minimum trial count.
void bm_chain_cycle(benchmark::State& state) {
    unsigned bits = static_cast<unsigned>(state.range(0));
    for (auto _ : state) {
        BenchStats stats = bench_chain_cycle(bits, 5);
        state.SetIterationTime(stats.mean_s);
        benchmark::DoNotOptimize(stats);
    }
}
BENCHMARK(bm_chain_cycle)->Arg(1024)->Arg(2048)->UseManualTime()->Unit(benchmark::kMillisecond)->Iterations(1);

} // namespace

BENCHMARK_MAIN();
