#include "cpekit/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "cpekit/design.hpp"
#include "cpekit/errors.hpp"
#include "cpekit/hankel.hpp"
#include "cpekit/io.hpp"

namespace cpekit {

void FlopModel::validate() const {
    if (m < 1 || order_L < 1) throw InputError("flop model: m and L must be positive");
    for (Index c : pe_trial_columns)
        if (c < 1) throw InputError("flop model: PE trial column counts must be positive");
    for (Index c : mosaic_columns)
        if (c < 1) throw InputError("flop model: mosaic column counts must be positive");
}

Index FlopModel::total_mosaic_columns() const {
    return std::accumulate(mosaic_columns.begin(), mosaic_columns.end(), Index{0});
}

double FlopModel::mean_trial_columns() const {
    if (pe_trial_columns.empty()) return 0.0;
    return static_cast<double>(std::accumulate(pe_trial_columns.begin(), pe_trial_columns.end(), Index{0})) /
           static_cast<double>(pe_trial_columns.size());
}

FlopCosts flop_costs(const FlopModel& model) {
    model.validate();
    const auto rows = static_cast<std::uint64_t>(model.m * model.order_L);
    const std::uint64_t unit = rows * rows;
    FlopCosts c;
    for (Index ck : model.pe_trial_columns) c.pe_repeated += unit * static_cast<std::uint64_t>(ck);
    c.mcpe = unit * static_cast<std::uint64_t>(model.total_mosaic_columns());
    return c;
}

std::vector<Index> columns_from_lengths(const std::vector<Index>& lengths, Index order_L) {
    if (order_L < 1) throw InputError("columns_from_lengths: L must be positive");
    std::vector<Index> out;
    for (Index t : lengths) out.push_back(std::max<Index>(0, t - order_L + 1));
    return out;
}

Index crossover_threshold(Index total_columns, Index c_bar) {
    if (c_bar < 1) throw InputError("crossover_threshold: c_bar must be >= 1");
    if (total_columns < 0) throw InputError("crossover_threshold: C must be nonnegative");
    return (total_columns + c_bar - 1) / c_bar;
}

std::string to_string(OrderingVerdict v) {
    switch (v) {
        case OrderingVerdict::Confirmed: return "confirmed";
        case OrderingVerdict::Violated: return "violated";
        case OrderingVerdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

namespace {

double quantile(std::vector<double> v, double q) {
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Exact one-sided Mann-Whitney p-value for "x tends to be smaller than y".
// U counts pairs with y_j <= x_i (ties count against x); p = P(U <= U_obs) under exchangeability.
double rank_sum_p_value(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t k = x.size(), l = y.size();
    std::size_t u_obs = 0;
    for (double xi : x)
        for (double yj : y)
            if (yj <= xi) ++u_obs;
    // counts[a][u]: interleavings of a x's with the current number of y's having statistic u.
    const std::size_t u_max = k * l;
    std::vector<std::vector<double>> counts(k + 1, std::vector<double>(u_max + 1, 0.0));
    for (std::size_t a = 0; a <= k; ++a) counts[a][0] = 1.0;
    for (std::size_t b = 1; b <= l; ++b) {
        std::vector<std::vector<double>> next(k + 1, std::vector<double>(u_max + 1, 0.0));
        next[0][0] = 1.0;
        for (std::size_t a = 1; a <= k; ++a)
            for (std::size_t u = 0; u <= u_max; ++u)
                next[a][u] = counts[a][u] + (u >= b ? next[a - 1][u - b] : 0.0);
        counts = std::move(next);
    }
    const double total = std::accumulate(counts[k].begin(), counts[k].end(), 0.0);
    const double below = std::accumulate(counts[k].begin(), counts[k].begin() + static_cast<long>(u_obs) + 1, 0.0);
    return below / total;
}

}  // namespace

RankBenchRow summarize_timings(std::string mode, Index rows, Index cols, std::vector<double> samples) {
    if (samples.empty()) throw InputError("summarize_timings: no samples for mode '" + mode + "'");
    RankBenchRow row;
    row.mode = std::move(mode);
    row.rows = rows;
    row.cols = cols;
    row.median_seconds = quantile(samples, 0.5);
    row.spread_seconds = quantile(samples, 0.75) - quantile(samples, 0.25);
    row.samples = std::move(samples);
    return row;
}

OrderingVerdict RankBenchReport::ordering(const std::vector<std::string>& order) const {
    std::vector<const RankBenchRow*> seq;
    for (const auto& name : order) {
        auto it = std::find_if(rows.begin(), rows.end(), [&](const RankBenchRow& r) { return r.mode == name; });
        if (it == rows.end()) throw InputError("bench ordering: no row for mode '" + name + "'");
        seq.push_back(&*it);
    }
    bool resolved = true;
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
        const RankBenchRow& a = *seq[i];
        const RankBenchRow& b = *seq[i + 1];
        if (a.samples.empty() || b.samples.empty())
            throw InputError("bench ordering: rows need timing samples");
        const double gap = b.median_seconds - a.median_seconds;
        const bool large = std::abs(gap) > 0.1 * std::max(a.median_seconds, b.median_seconds);
        if (large && rank_sum_p_value(a.samples, b.samples) < 0.01) continue;
        if (large && rank_sum_p_value(b.samples, a.samples) < 0.01) return OrderingVerdict::Violated;
        resolved = false;
    }
    return resolved ? OrderingVerdict::Confirmed : OrderingVerdict::Inconclusive;
}

std::string RankBenchReport::to_csv() const {
    std::ostringstream os;
    os << "mode,rows,cols,median_seconds\n";
    for (const auto& r : rows) os << r.mode << ',' << r.rows << ',' << r.cols << ',' << format_double(r.median_seconds) << '\n';
    return os.str();
}

RankBenchReport time_operations(const std::vector<TimedOperation>& ops, const RankBenchOptions& opts) {
    if (opts.runs < 1 || opts.warmups < 0) throw InputError("timed benchmark: runs must be >= 1, warmups >= 0");
    using clock = std::chrono::steady_clock;
    auto time_batch = [](const TimedOperation& t, Index batch) {
        const auto t0 = clock::now();
        for (Index b = 0; b < batch; ++b) t.op();
        return std::chrono::duration<double>(clock::now() - t0).count();
    };
    // Calibrate each batch size so that one timed sample is long enough to resolve.
    std::vector<Index> batches;
    for (const auto& t : ops) {
        if (!t.op) throw InputError("timed benchmark: no operation for mode '" + t.mode + "'");
        for (int i = 0; i < opts.warmups; ++i) t.op();
        Index batch = 1;
        while (time_batch(t, batch) < opts.min_sample_seconds && batch < (Index{1} << 20)) batch *= 2;
        batches.push_back(batch);
    }
    // Round-robin sampling with a rotating start, so slow drifts of the machine hit every mode alike.
    std::vector<std::vector<double>> samples(ops.size());
    for (int r = 0; r < opts.runs; ++r)
        for (std::size_t k = 0; k < ops.size(); ++k) {
            const std::size_t i = (k + static_cast<std::size_t>(r)) % ops.size();
            samples[i].push_back(time_batch(ops[i], batches[i]) / static_cast<double>(batches[i]));
        }
    RankBenchReport rep;
    for (std::size_t i = 0; i < ops.size(); ++i) {
        rep.rows.push_back(summarize_timings(ops[i].mode, ops[i].rows, ops[i].cols, std::move(samples[i])));
        rep.rows.back().batch = batches[i];
    }
    return rep;
}

RankBenchRow time_operation(std::string mode, Index rows, Index cols, const std::function<void()>& op,
                            const RankBenchOptions& opts) {
    return time_operations({{std::move(mode), rows, cols, op}}, opts).rows.front();
}

RankBenchReport timed_rank_bench(const std::vector<RankBenchScenario>& scenarios, const RankBenchOptions& opts) {
    volatile Index sink = 0;
    std::vector<TimedOperation> ops;
    for (const auto& sc : scenarios) {
        if (sc.matrix.size() == 0) throw InputError("timed_rank_bench: empty matrix for mode '" + sc.mode + "'");
        ops.push_back({sc.mode, sc.matrix.rows(), sc.matrix.cols(),
                       [&sink, &m = sc.matrix] { sink = sink + numeric_rank(m).numeric_rank; }});
    }
    return time_operations(ops, opts);
}

std::vector<RankBenchScenario> matched_rank_scenarios(Index m, Index depth, std::size_t p, Index length,
                                                      std::size_t p_bar, std::uint64_t seed) {
    if (p < 2 || p_bar < 1 || p_bar >= p) throw InputError("matched_rank_scenarios: need p >= 2 and 1 <= p_bar < p");
    std::vector<RankBenchScenario> out;
    // Members longer than (m+1)L-2 would be PE on their own, so mosaic-type members are designed at
    // the smallest order >= depth that keeps them non-PE; excitation of a higher order implies depth.
    Index member_order = depth;
    while ((m + 1) * member_order - 2 < length) ++member_order;
    const std::vector<Index> tails(p - p_bar, length);
    const DesignRequest reqs[] = {
        DesignRequest::cumulative(m, depth, p, length, seed),
        DesignRequest::hybrid(m, member_order, p_bar, length, tails, seed),
        DesignRequest::mosaic(m, member_order, std::vector<Index>(p, length), seed),
    };
    for (const auto& req : reqs) {
        const DesignResult d = design_signals(req);
        out.push_back({req.mode.kind_name(), build_composite(d.bundle.with_shared_prefix(req.mode.prefix_count), depth,
                                                             req.mode).matrix});
    }
    return out;
}

}  // namespace cpekit
