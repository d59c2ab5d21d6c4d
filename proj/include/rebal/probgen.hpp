#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rebal/task.hpp"

namespace rebal::probgen {

/// Deterministic RNG wrapper. mt19937_64's output sequence is pinned by the
/// standard; the bounded draws below avoid std::uniform_int_distribution,
/// whose mapping is implementation-defined, so equal seeds give bit-equal
/// tasks on every platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// uniform in [lo, hi] via rejection sampling
    std::int64_t uniform(std::int64_t lo, std::int64_t hi) {
        if (lo > hi)
            throw std::invalid_argument("empty uniform range");
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0)
            return static_cast<std::int64_t>(next()); // full range
        std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % span;
        std::uint64_t r;
        do {
            r = next();
        } while (r >= limit);
        return lo + static_cast<std::int64_t>(r % span);
    }

    template <typename T> void shuffle(std::vector<T> &v) {
        for (std::size_t i = v.size(); i > 1; --i)
            std::swap(v[i - 1], v[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(i) - 1))]);
    }

    template <typename T> const T &choice(const std::vector<T> &v) {
        return v[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(v.size()) - 1))];
    }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
    // splitmix64 over the packed coordinates
    std::uint64_t z = base + 0x9e3779b97f4a7c15ull * (a * 0x100000001ull + b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

struct GeneratorConfig {
    int n_holdings = 10;
    int transferable_num = 7; // transferable_ratio as an exact rational
    int transferable_den = 10;
    Money portfolio_value = 1000000; // 10k units of 100 minor each
    Money flow_granularity = 10000;  // 1% of the default portfolio value
    std::vector<Money> etf_fixed_fee_choices = {50, 100, 250};
    int variable_fee_bps_lo = 1;
    int variable_fee_bps_hi = 10;
    std::uint64_t seed = 0;

    void check() const {
        if (n_holdings < 2)
            throw std::invalid_argument("generator needs at least 2 holdings");
        if (transferable_num <= 0 || transferable_den <= 0 ||
            transferable_num >= transferable_den)
            throw std::invalid_argument("transferable ratio must be in (0,1)");
        if (portfolio_value <= 0 || flow_granularity <= 0)
            throw std::invalid_argument("portfolio value and granularity must be positive");
        if (portfolio_value % flow_granularity != 0)
            throw std::invalid_argument("flow granularity must divide the portfolio value");
        if (etf_fixed_fee_choices.empty())
            throw std::invalid_argument("no ETF fixed fee choices");
        if (variable_fee_bps_lo < 0 || variable_fee_bps_hi < variable_fee_bps_lo)
            throw std::invalid_argument("bad variable fee range");
    }
};

namespace detail3 {

/// Quantizes `weights` to multiples of `step` summing to `total`
/// (largest-remainder method, pure integer arithmetic so the result is
/// identical on every platform).
inline std::vector<Money> quantize(const std::vector<std::uint64_t> &weights,
                                   Money total, Money step) {
    std::size_t n = weights.size();
    detail::int128 sum = 0;
    for (auto w : weights)
        sum += w;
    Money quanta = total / step;
    std::vector<Money> out(n, 0);
    std::vector<std::pair<detail::int128, std::size_t>> rema;
    Money assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        detail::int128 exact_num = detail::int128(quanta) * weights[i];
        Money base = detail::checked_i64(exact_num / sum, "quantize");
        out[i] = base;
        assigned += base;
        rema.push_back({exact_num % sum, i});
    }
    std::stable_sort(rema.begin(), rema.end(), [](const auto &a, const auto &b) {
        if (a.first != b.first)
            return a.first > b.first;
        return a.second < b.second;
    });
    for (Money k = 0; k < quanta - assigned; ++k)
        ++out[rema[static_cast<std::size_t>(k) % n].second];
    for (auto &o : out)
        o *= step;
    return out;
}

} // namespace detail3

/// Seeded sampler of update tasks: ⌊ratio·n⌋ transferable mutual funds with
/// no fixed fee, the rest ETFs with a fixed fee drawn from the configured
/// alternatives, integer variable fees in the configured bps range, and
/// balanced granularity-quantized flows obtained by perturbing a uniformly
/// sampled current allocation. Equal configs give bit-identical tasks.
inline UpdateTask generate_task(const GeneratorConfig &config) {
    config.check();
    Rng rng(config.seed);
    const int n = config.n_holdings;
    const int n_funds = (n * config.transferable_num) / config.transferable_den;
    if (n_funds < 1)
        throw std::invalid_argument("transferable ratio leaves no funds at this size");
    const Money g = config.flow_granularity;

    std::vector<int> position(static_cast<std::size_t>(n));
    std::iota(position.begin(), position.end(), 0);
    rng.shuffle(position);
    std::vector<bool> is_fund(static_cast<std::size_t>(n), false);
    for (int i = 0; i < n_funds; ++i)
        is_fund[static_cast<std::size_t>(position[static_cast<std::size_t>(i)])] = true;

    std::vector<Holding> holdings;
    int fund_no = 0, etf_no = 0;
    for (int i = 0; i < n; ++i) {
        Holding h;
        if (is_fund[static_cast<std::size_t>(i)]) {
            ++fund_no;
            h.id = "F" + std::string(fund_no < 10 ? "0" : "") + std::to_string(fund_no);
            h.name = "Mutual Fund " + std::to_string(fund_no);
            h.transferable = true;
            h.fixed_fee = 0;
        } else {
            ++etf_no;
            h.id = "E" + std::string(etf_no < 10 ? "0" : "") + std::to_string(etf_no);
            h.name = "ETF " + std::to_string(etf_no);
            h.transferable = false;
            h.fixed_fee = rng.choice(config.etf_fixed_fee_choices);
        }
        h.variable_fee_bps = Bps(rng.uniform(config.variable_fee_bps_lo,
                                             config.variable_fee_bps_hi));
        holdings.push_back(std::move(h));
    }

    // current allocation: uniform weights scaled and quantized to the grid
    std::vector<std::uint64_t> weights;
    for (int i = 0; i < n; ++i)
        weights.push_back(rng.next() >> 11 | 1u);
    std::vector<Money> current = detail3::quantize(weights, config.portfolio_value, g);

    // flows: a random side split, one quantum per flow plus random extras,
    // resampled until the out and in amount multisets differ so that some
    // flow must split across two counterparts (n >= 4)
    for (int attempt = 0; attempt < 256; ++attempt) {
        std::vector<int> outs, ins;
        for (int i = 0; i < n; ++i)
            (rng.uniform(0, 1) == 0 ? outs : ins).push_back(i);
        if (outs.empty() || ins.empty())
            continue;
        std::vector<Money> cap(static_cast<std::size_t>(n), 0);
        Money capacity = 0;
        bool affordable = true;
        for (int o : outs) {
            cap[static_cast<std::size_t>(o)] = current[static_cast<std::size_t>(o)] / g;
            if (cap[static_cast<std::size_t>(o)] < 1)
                affordable = false;
            capacity += cap[static_cast<std::size_t>(o)];
        }
        if (!affordable)
            continue;
        Money base = static_cast<Money>(std::max(outs.size(), ins.size()));
        Money k_total = base + rng.uniform(0, n);
        k_total = std::min(k_total, capacity);
        if (k_total < base)
            continue;

        std::vector<Money> k_out(static_cast<std::size_t>(n), 0), k_in(static_cast<std::size_t>(n), 0);
        for (int o : outs)
            k_out[static_cast<std::size_t>(o)] = 1;
        for (int i2 : ins)
            k_in[static_cast<std::size_t>(i2)] = 1;
        Money left = k_total - static_cast<Money>(outs.size());
        for (int guard = 0; left > 0 && guard < 4096; ++guard) {
            int o = outs[static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(outs.size()) - 1))];
            if (k_out[static_cast<std::size_t>(o)] < cap[static_cast<std::size_t>(o)]) {
                ++k_out[static_cast<std::size_t>(o)];
                --left;
            }
        }
        if (left > 0)
            continue;
        left = k_total - static_cast<Money>(ins.size());
        while (left > 0) {
            int i2 = ins[static_cast<std::size_t>(rng.uniform(0, static_cast<std::int64_t>(ins.size()) - 1))];
            ++k_in[static_cast<std::size_t>(i2)];
            --left;
        }

        if (n >= 4) {
            std::vector<Money> mo, mi;
            for (int o : outs)
                mo.push_back(k_out[static_cast<std::size_t>(o)]);
            for (int i2 : ins)
                mi.push_back(k_in[static_cast<std::size_t>(i2)]);
            std::sort(mo.begin(), mo.end());
            std::sort(mi.begin(), mi.end());
            if (mo == mi)
                continue; // a perfect matching would exist; resample
        }

        UpdateTask task;
        task.cost_model = CostModel(holdings);
        for (int o : outs)
            task.outflows[holdings[static_cast<std::size_t>(o)].id] =
                k_out[static_cast<std::size_t>(o)] * g;
        for (int i2 : ins)
            task.inflows[holdings[static_cast<std::size_t>(i2)].id] =
                k_in[static_cast<std::size_t>(i2)] * g;
        task.initial_cash = 0;
        task.check();
        return task;
    }
    throw std::domain_error("generator could not produce balanced granular flows "
                            "for this configuration");
}

struct SuiteEntry {
    std::string id;
    GeneratorConfig config;
    UpdateTask task;
};

/// `per_size` tasks per portfolio size, seeds derived from the base seed.
inline std::vector<SuiteEntry> generate_suite(const std::vector<int> &sizes,
                                              int per_size,
                                              std::uint64_t base_seed,
                                              const GeneratorConfig &base = {}) {
    if (sizes.empty())
        throw std::invalid_argument("no sizes given");
    std::vector<SuiteEntry> suite;
    for (int size : sizes) {
        for (int k = 0; k < per_size; ++k) {
            GeneratorConfig cfg = base;
            cfg.n_holdings = size;
            cfg.seed = derive_seed(base_seed, static_cast<std::uint64_t>(size),
                                   static_cast<std::uint64_t>(k));
            std::string id = "t" + std::string(size < 10 ? "0" : "") + std::to_string(size) +
                             "_" + std::string(k < 100 ? (k < 10 ? "00" : "0") : "") +
                             std::to_string(k);
            suite.push_back({id, cfg, generate_task(cfg)});
        }
    }
    return suite;
}

} // namespace rebal::probgen
