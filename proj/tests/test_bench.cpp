#include <doctest.h>

#include <random>

#include "cpekit/bench.hpp"
#include "cpekit/errors.hpp"
#include "support/oracles.hpp"

using namespace cpekit;

TEST_CASE("flop model") {
    FlopModel single{2, 5, {11}, {3, 3, 2, 2, 1}};
    FlopCosts c = flop_costs(single);
    CHECK(c.mcpe == 1100);
    CHECK(c.pe_repeated == c.mcpe);

    FlopModel twice{2, 5, {10, 10}, columns_from_lengths({7, 7, 6, 6, 5}, 5)};
    CHECK(twice.total_mosaic_columns() == 11);
    CHECK(twice.mean_trial_columns() == doctest::Approx(10.0));
    c = flop_costs(twice);
    CHECK(c.pe_repeated == 2000);
    CHECK(c.mcpe == 1100);
    CHECK(c.pe_repeated > c.mcpe);

    CHECK_THROWS_AS(flop_costs(FlopModel{2, 5, {0}, {3}}), InputError);
    CHECK(columns_from_lengths({4, 5, 9}, 5) == std::vector<Index>{0, 1, 5});
}

TEST_CASE("repeated PE costs more exactly when the trial columns exceed the mosaic columns") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<Index> d(1, 20);
    for (int t = 0; t < 200; ++t) {
        FlopModel f{d(rng) % 3 + 1, d(rng) % 6 + 1, {}, {}};
        const int k = static_cast<int>(d(rng) % 5) + 1, p = static_cast<int>(d(rng) % 5) + 1;
        Index sum_k = 0, sum_c = 0;
        for (int i = 0; i < k; ++i) sum_k += f.pe_trial_columns.emplace_back(d(rng));
        for (int i = 0; i < p; ++i) sum_c += f.mosaic_columns.emplace_back(d(rng));
        const FlopCosts c = flop_costs(f);
        CHECK((c.pe_repeated > c.mcpe) == (sum_k > sum_c));
    }
}

TEST_CASE("crossover threshold") {
    CHECK(crossover_threshold(11, 10) == 2);
    CHECK(crossover_threshold(10, 10) == 1);
    CHECK(crossover_threshold(1, 10) == 1);
    CHECK_THROWS_AS(crossover_threshold(10, 0), InputError);
    for (Index cc = 1; cc < 60; ++cc)
        for (Index cb = 1; cb < 20; ++cb) {
            CHECK(crossover_threshold(cc + 1, cb) >= crossover_threshold(cc, cb));
            CHECK(crossover_threshold(cc, cb + 1) <= crossover_threshold(cc, cb));
        }
}

TEST_CASE("ordering verdicts") {
    auto row = [](const char* mode, double med, double jitter) {
        return summarize_timings(mode, 1, 1, {med - jitter, med, med + jitter, med - 0.5 * jitter, med + 0.5 * jitter});
    };
    RankBenchReport rep;
    rep.rows = {row("cumulative", 1e-4, 1e-6), row("hybrid", 1e-3, 1e-5), row("mosaic", 5e-3, 1e-5)};
    CHECK(rep.rows[0].median_seconds == doctest::Approx(1e-4));
    CHECK(rep.rows[0].spread_seconds == doctest::Approx(1e-6));
    CHECK(rep.ordering({"cumulative", "hybrid", "mosaic"}) == OrderingVerdict::Confirmed);
    CHECK(rep.ordering({"mosaic", "hybrid", "cumulative"}) == OrderingVerdict::Violated);
    // 5% apart: below the practical-significance floor
    rep.rows[1] = row("hybrid", 1.05e-4, 1e-7);
    CHECK(rep.ordering({"cumulative", "hybrid", "mosaic"}) == OrderingVerdict::Inconclusive);
    // 50% apart but overlapping samples
    rep.rows[1] = row("hybrid", 1.5e-4, 8e-5);
    CHECK(rep.ordering({"cumulative", "hybrid", "mosaic"}) == OrderingVerdict::Inconclusive);
    CHECK_THROWS_AS(rep.ordering({"cumulative", "nope"}), InputError);

    // One outlier crossing the other sample set still resolves at 7 + 7 samples (p = 2/3432),
    // while heavily interleaved samples do not.
    RankBenchReport two;
    two.rows = {summarize_timings("a", 1, 1, {10, 11, 12, 13, 14, 15, 20.5}),
                summarize_timings("b", 1, 1, {20, 21, 22, 23, 24, 25, 26})};
    CHECK(two.ordering({"a", "b"}) == OrderingVerdict::Confirmed);
    two.rows[0] = summarize_timings("a", 1, 1, {10, 21.5, 12, 23.5, 14, 25.5, 30});
    two.rows[1] = summarize_timings("b", 1, 1, {11, 21, 13, 23, 15, 25, 40});
    CHECK(two.ordering({"a", "b"}) == OrderingVerdict::Inconclusive);
    CHECK(rep.to_csv().rfind("mode,rows,cols,median_seconds\n", 0) == 0);
}

TEST_CASE("timed benchmark") {
    std::mt19937_64 rng(1);
    const Matrix tiny = oracle::random_matrix(2, 2, rng);
    const RankBenchOptions fast{1, 7, 1e-3};
    const RankBenchReport same = timed_rank_bench({{"cumulative", tiny}, {"hybrid", tiny}, {"mosaic", tiny}}, fast);
    CHECK(same.rows.size() == 3);
    CHECK(same.rows[0].rows == 2);
    CHECK(same.rows[0].samples.size() == 7);
    CHECK(same.ordering({"cumulative", "hybrid", "mosaic"}) == OrderingVerdict::Inconclusive);

    const RankBenchReport grow = timed_rank_bench(
        {{"small", oracle::random_matrix(40, 50, rng)}, {"large", oracle::random_matrix(40, 1600, rng)}}, fast);
    CHECK(grow.rows[1].median_seconds > grow.rows[0].median_seconds);
}

TEST_CASE("matched scenarios") {
    const auto sc = matched_rank_scenarios(2, 9, 10, 30, 3, 0);
    REQUIRE(sc.size() == 3);
    CHECK(sc[0].mode == "cumulative");
    CHECK(sc[1].mode == "hybrid");
    CHECK(sc[2].mode == "mosaic");
    for (const auto& s : sc) CHECK(s.matrix.rows() == 18);
    CHECK(sc[0].matrix.cols() == 22);
    CHECK(sc[1].matrix.cols() == 22 + 7 * 22);
    CHECK(sc[2].matrix.cols() == 10 * 22);
}
