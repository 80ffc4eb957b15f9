#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cpekit/linalg.hpp"

namespace cpekit {

// Unit-constant cost model for rank checking: one rank test of an (mL) x C matrix costs (mL)^2 C.
struct FlopModel {
    Index m = 1;
    Index order_L = 1;
    std::vector<Index> pe_trial_columns;  // C_k of each repeated single-trajectory PE trial
    std::vector<Index> mosaic_columns;    // C_i = T_i - L + 1 of each mosaic member

    void validate() const;
    Index total_mosaic_columns() const;  // C
    double mean_trial_columns() const;   // c-bar
};

struct FlopCosts {
    std::uint64_t pe_repeated = 0;  // sum_k (mL)^2 C_k
    std::uint64_t mcpe = 0;         // (mL)^2 sum_i C_i
};

FlopCosts flop_costs(const FlopModel& model);

// Column counts T_i - L + 1 (members shorter than L contribute nothing).
std::vector<Index> columns_from_lengths(const std::vector<Index>& lengths, Index order_L);

// K_th = ceil(C / c_bar)
Index crossover_threshold(Index total_columns, Index c_bar);

struct RankBenchScenario {
    std::string mode;  // label, e.g. "cumulative"
    Matrix matrix;
};

struct RankBenchRow {
    std::string mode;
    Index rows = 0;
    Index cols = 0;
    double median_seconds = 0.0;
    double spread_seconds = 0.0;  // interquartile range of the samples
    Index batch = 1;              // rank computations per timed sample
    std::vector<double> samples;
};

enum class OrderingVerdict { Confirmed, Violated, Inconclusive };
std::string to_string(OrderingVerdict v);

struct RankBenchOptions {
    int warmups = 2;
    int runs = 7;
    double min_sample_seconds = 2e-3;  // batch repetitions until one sample lasts this long
};

struct RankBenchReport {
    std::vector<RankBenchRow> rows;

    // Expected strictly increasing timings along `order` (mode labels). An adjacent pair is
    // resolved when the medians differ by more than 10% and a one-sided exact rank-sum test
    // rejects exchangeable samples at p < 0.01; Violated when a resolved pair runs the wrong
    // way, Inconclusive when any pair is unresolved.
    OrderingVerdict ordering(const std::vector<std::string>& order) const;
    // "mode,rows,cols,median_seconds"
    std::string to_csv() const;
};

// Median and interquartile range of externally measured timings (e.g. per-step QP solves).
RankBenchRow summarize_timings(std::string mode, Index rows, Index cols, std::vector<double> samples);

struct TimedOperation {
    std::string mode;
    Index rows = 0;
    Index cols = 0;
    std::function<void()> op;
};

// Warm-ups and batch calibration per operation, then `runs` samples taken round-robin across
// the operations so that machine drift affects every row alike.
RankBenchReport time_operations(const std::vector<TimedOperation>& ops, const RankBenchOptions& opts = {});

// Single-operation form of time_operations.
RankBenchRow time_operation(std::string mode, Index rows, Index cols, const std::function<void()>& op,
                            const RankBenchOptions& opts = {});

// Rank-check timings of the scenarios via time_operations, single-threaded.
RankBenchReport timed_rank_bench(const std::vector<RankBenchScenario>& scenarios, const RankBenchOptions& opts = {});

// Matched data-volume scenario: p designed input trajectories of length T per mode (m inputs),
// composed at Hankel depth `depth` (cumulative / hybrid(p_bar) / mosaic). Mosaic and hybrid
// members are designed at the smallest order >= depth for which length-T members stay non-PE.
std::vector<RankBenchScenario> matched_rank_scenarios(Index m, Index depth, std::size_t p, Index length,
                                                      std::size_t p_bar, std::uint64_t seed);

}  // namespace cpekit
