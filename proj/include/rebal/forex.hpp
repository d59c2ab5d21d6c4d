#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "rebal/search.hpp"

namespace rebal::forex {

/// Exchange rate as an exact positive rational: units of the target
/// currency per unit of the source currency.
struct Rate {
    std::int64_t num = 1;
    std::int64_t den = 1;

    Rate() = default;
    Rate(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (n <= 0 || d <= 0)
            throw std::domain_error("exchange rates must be positive");
    }

    Rate reciprocal() const { return Rate(den, num); }

    /// floor(amount * rate): converted value never exceeds the exact product.
    Money convert(Money amount) const {
        return detail::div_floor(detail::int128(amount) * num, den);
    }
};

/// Snapshot rate table for the planning horizon plus the variable exchange
/// fee. Missing reciprocals are filled exactly; rates for every ordered pair
/// of used currencies must then exist.
struct FxTable {
    std::map<std::pair<std::string, std::string>, Rate> rates;
    Bps fee_bps;

    void add_rate(const std::string &from, const std::string &to, Rate r) {
        rates[{from, to}] = r;
        if (!rates.count({to, from}))
            rates[{to, from}] = r.reciprocal();
    }

    const Rate &rate(const std::string &from, const std::string &to) const {
        auto it = rates.find({from, to});
        if (it == rates.end())
            throw std::domain_error("no exchange rate for " + from + "->" + to);
        return it->second;
    }

    /// rate(a,b) * rate(b,a) must be 1 up to one unit in the last place.
    void check() const {
        for (auto &[pair, r] : rates) {
            auto back = rates.find({pair.second, pair.first});
            if (back == rates.end())
                throw std::invalid_argument("missing reciprocal rate for " + pair.first +
                                            "->" + pair.second);
            auto lhs = detail::int128(r.num) * back->second.num;
            auto rhs = detail::int128(r.den) * back->second.den;
            auto diff = lhs > rhs ? lhs - rhs : rhs - lhs;
            if (diff * 1000000 > rhs)
                throw std::invalid_argument("rates " + pair.first + "<->" + pair.second +
                                            " are not mutual reciprocals");
        }
    }
};

/// An update task whose holdings carry currency tags.
struct CurrencyTask {
    UpdateTask base;
    FxTable fx;

    std::vector<std::string> currencies() const {
        std::set<std::string> seen;
        for (const Holding &h : base.cost_model.holdings())
            seen.insert(h.currency.value_or(""));
        if (seen.count(""))
            throw std::invalid_argument("multi-currency task with untagged holdings");
        return {seen.begin(), seen.end()};
    }

    void check() const {
        base.check();
        fx.check();
        auto curs = currencies();
        for (const std::string &a : curs)
            for (const std::string &b : curs)
                if (a != b)
                    fx.rate(a, b);
        const CostModel &cm = base.cost_model;
        for (std::size_t x = 0; x < cm.size(); ++x)
            for (std::size_t y = 0; y < cm.size(); ++y)
                if (x != y && cm.transferable(x) && cm.transferable(y) &&
                    cm.holding(x).currency != cm.holding(y).currency) {
                    // a cross-currency in-kind transfer would hide an fx leg
                    throw std::invalid_argument(
                        "transferable holdings " + cm.holding(x).id + " and " +
                        cm.holding(y).id + " are in different currencies");
                }
    }
};

/// State with one cash balance per currency instead of the scalar w.
struct CurrencyState {
    std::vector<Money> u;
    std::vector<Money> v;
    std::vector<Money> balances; // by currency index

    friend bool operator==(const CurrencyState &a, const CurrencyState &b) {
        return a.u == b.u && a.v == b.v && a.balances == b.balances;
    }
};

struct CurrencyStateHash {
    std::size_t operator()(const CurrencyState &s) const {
        std::uint64_t h = 1469598103934665603ull;
        auto mix = [&h](std::uint64_t x) {
            h ^= x;
            h *= 1099511628211ull;
        };
        for (Money m : s.u)
            mix(static_cast<std::uint64_t>(m));
        mix(0x9e3779b97f4a7c15ull);
        for (Money m : s.v)
            mix(static_cast<std::uint64_t>(m));
        mix(0xc2b2ae3d27d4eb4full);
        for (Money m : s.balances)
            mix(static_cast<std::uint64_t>(m));
        return static_cast<std::size_t>(h);
    }
};

enum class ExchangeKind { Available, Needed };

struct ExchangeAction {
    ExchangeKind kind = ExchangeKind::Available;
    std::string from_currency;
    std::string to_currency;
    Money source_amount = 0; // amount leaving from_currency
    Money received = 0;      // amount arriving in to_currency
    Money cost = 0;          // fee, charged in the source currency
    std::optional<std::string> target; // Needed: the inflow being covered

    std::string describe() const {
        std::ostringstream os;
        os << (kind == ExchangeKind::Available ? "EXCHANGE-AVAILABLE" : "EXCHANGE-NEEDED")
           << ' ' << format_money(source_amount) << ' ' << from_currency << " to "
           << to_currency;
        if (target)
            os << " for " << *target;
        return os.str();
    }

    friend bool operator==(const ExchangeAction &a, const ExchangeAction &b) {
        return a.kind == b.kind && a.from_currency == b.from_currency &&
               a.to_currency == b.to_currency && a.source_amount == b.source_amount &&
               a.received == b.received && a.cost == b.cost && a.target == b.target;
    }
};

using FxStep = std::variant<Action, ExchangeAction>;

struct FxPlan {
    std::vector<FxStep> steps;
    Money total_cost = 0;

    std::size_t length() const { return steps.size(); }
    void push(FxStep s) {
        total_cost += std::visit([](const auto &a) { return a.cost; }, s);
        steps.push_back(std::move(s));
    }
};

/// Compiled view: currency indices, per-holding currency, fee tables.
class FxContext {
public:
    explicit FxContext(const CurrencyTask &task)
        : task_(&task), base_ctx_(task.base), currencies_(task.currencies()) {
        task.check();
        const CostModel &cm = task.base.cost_model;
        holding_currency_.resize(cm.size());
        for (std::size_t i = 0; i < cm.size(); ++i)
            holding_currency_[i] = currency_index(*cm.holding(i).currency);
    }

    const CurrencyTask &task() const { return *task_; }
    const statespace::TaskContext &base() const { return base_ctx_; }
    const std::vector<std::string> &currencies() const { return currencies_; }
    std::size_t currency_index(const std::string &c) const {
        auto it = std::lower_bound(currencies_.begin(), currencies_.end(), c);
        if (it == currencies_.end() || *it != c)
            throw std::domain_error("unknown currency " + c);
        return static_cast<std::size_t>(it - currencies_.begin());
    }
    std::size_t holding_currency(std::size_t holding) const {
        return holding_currency_[holding];
    }

    /// Exchange fees round up to the next minor unit, so no exchange with a
    /// positive fee rate is ever free; splitting an exchange can then never
    /// reduce the total fee below the consolidated one.
    Money exchange_fee(Money source) const {
        const Bps &f = task_->fx.fee_bps;
        if (f.is_zero())
            return 0;
        return detail::div_ceil(detail::int128(f.num) * source,
                                detail::int128(f.den) * 10000);
    }

    /// Net amount arriving when `source` units of currency a are exchanged
    /// into b: the fee is taken from the source, the rest converts at the
    /// snapshot rate, rounded down.
    Money net_convert(std::size_t a, std::size_t b, Money source) const {
        Money fee = exchange_fee(source);
        if (fee >= source)
            return 0;
        return task_->fx.rate(currencies_[a], currencies_[b]).convert(source - fee);
    }

    /// Minimal source amount in a whose net conversion covers `needed` in b.
    std::optional<Money> source_for(std::size_t a, std::size_t b, Money needed,
                                    Money available) const {
        const Rate &r = task_->fx.rate(currencies_[a], currencies_[b]);
        const Bps &f = task_->fx.fee_bps;
        // s * (1 - f) * r >= needed, solved in exact integers, then nudged
        // over the floor/rounding seams
        detail::int128 fee_den = detail::int128(f.den) * 10000;
        detail::int128 numer = detail::int128(needed) * r.den * fee_den;
        detail::int128 denom = detail::int128(r.num) * (fee_den - f.num);
        if (denom <= 0)
            return std::nullopt; // fee eats everything
        Money s = detail::div_ceil(numer, denom);
        while (s <= available && net_convert(a, b, s) < needed)
            ++s;
        if (s > available)
            return std::nullopt;
        while (s > 1 && net_convert(a, b, s - 1) >= needed)
            --s;
        return s;
    }

private:
    const CurrencyTask *task_;
    statespace::TaskContext base_ctx_;
    std::vector<std::string> currencies_;
    std::vector<std::size_t> holding_currency_;
};

inline CurrencyState initial_currency_state(const FxContext &ctx) {
    CurrencyState s;
    statespace::State base = statespace::initial_state(ctx.base());
    s.u = std::move(base.u);
    s.v = std::move(base.v);
    s.balances.assign(ctx.currencies().size(), 0);
    if (base.w > 0) {
        // untagged initial cash is not meaningful across currencies
        throw std::invalid_argument("multi-currency tasks must start with zero cash");
    }
    return s;
}

inline bool is_goal(const CurrencyState &s) {
    for (Money m : s.u)
        if (m != 0)
            return false;
    for (Money m : s.v)
        if (m != 0)
            return false;
    return true;
}

/// Shortfall of currency c: pending inflows denominated in c beyond the
/// cash already held in c.
inline Money currency_shortfall(const CurrencyState &s, const FxContext &ctx,
                                std::size_t c) {
    Money need = 0;
    for (std::size_t x = 0; x < s.v.size(); ++x)
        if (s.v[x] > 0 && ctx.holding_currency(x) == c)
            need += s.v[x];
    return need - s.balances[c];
}

struct FxSuccessor {
    FxStep step;
    CurrencyState state;
};

/// Exchange moves only: EXCHANGE-AVAILABLE turns a whole cash balance into a
/// currency that still has a shortfall; EXCHANGE-NEEDED converts exactly
/// enough to cover one pending inflow.
inline std::vector<FxSuccessor> exchange_successors(const CurrencyState &s,
                                                    const FxContext &ctx) {
    std::vector<FxSuccessor> out;
    const std::size_t ncur = ctx.currencies().size();
    if (ncur < 2)
        return out;
    for (std::size_t a = 0; a < ncur; ++a) {
        if (s.balances[a] <= 0)
            continue;
        for (std::size_t b = 0; b < ncur; ++b) {
            if (a == b)
                continue;
            if (currency_shortfall(s, ctx, b) <= 0)
                continue; // nothing in b is waiting for money
            Money source = s.balances[a];
            Money received = ctx.net_convert(a, b, source);
            if (received > 0) {
                CurrencyState nxt = s;
                nxt.balances[a] = 0;
                nxt.balances[b] += received;
                ExchangeAction ex;
                ex.kind = ExchangeKind::Available;
                ex.from_currency = ctx.currencies()[a];
                ex.to_currency = ctx.currencies()[b];
                ex.source_amount = source;
                ex.received = received;
                ex.cost = ctx.exchange_fee(source);
                out.push_back({std::move(ex), std::move(nxt)});
            }
            for (std::size_t x = 0; x < s.v.size(); ++x) {
                if (s.v[x] <= 0 || ctx.holding_currency(x) != b)
                    continue;
                Money needed = s.v[x] - s.balances[b];
                if (needed <= 0)
                    continue; // already covered; a buy applies instead
                auto src = ctx.source_for(a, b, needed, s.balances[a]);
                if (!src)
                    continue;
                Money got = ctx.net_convert(a, b, *src);
                CurrencyState nxt = s;
                nxt.balances[a] -= *src;
                nxt.balances[b] += got;
                ExchangeAction ex;
                ex.kind = ExchangeKind::Needed;
                ex.from_currency = ctx.currencies()[a];
                ex.to_currency = ctx.currencies()[b];
                ex.source_amount = *src;
                ex.received = got;
                ex.cost = ctx.exchange_fee(*src);
                ex.target = ctx.base().cost_model().holding(x).id;
                out.push_back({std::move(ex), std::move(nxt)});
            }
        }
    }
    return out;
}

/// Full transition function: the base five operators with per-currency cash
/// plus the exchange operators.
inline std::vector<FxSuccessor> fx_successors(const CurrencyState &s,
                                              const FxContext &ctx) {
    std::vector<FxSuccessor> out;
    const auto &base = ctx.base();
    const int n = static_cast<int>(base.size());
    for (int x = 0; x < n; ++x) {
        if (s.u[x] <= 0)
            continue;
        CurrencyState nxt = s;
        Money amount = s.u[x];
        nxt.u[x] = 0;
        nxt.balances[ctx.holding_currency(x)] += amount;
        Action a;
        a.kind = ActionKind::Sell;
        a.from = base.cost_model().holding(x).id;
        a.amount = amount;
        a.cost = base.price(ActionKind::Sell, x, -1, amount);
        out.push_back({std::move(a), std::move(nxt)});
    }
    for (int x = 0; x < n; ++x) {
        Money vx = s.v[x];
        if (vx <= 0)
            continue;
        Money bal = s.balances[ctx.holding_currency(x)];
        if (bal > 0 && vx - bal > 0) {
            CurrencyState nxt = s;
            nxt.v[x] = vx - bal;
            nxt.balances[ctx.holding_currency(x)] = 0;
            Action a;
            a.kind = ActionKind::BuyAvailable;
            a.to = base.cost_model().holding(x).id;
            a.amount = bal;
            a.cost = base.price(ActionKind::BuyAvailable, -1, x, bal);
            out.push_back({std::move(a), std::move(nxt)});
        }
        if (bal - vx >= 0) {
            CurrencyState nxt = s;
            nxt.v[x] = 0;
            nxt.balances[ctx.holding_currency(x)] = bal - vx;
            Action a;
            a.kind = ActionKind::BuyNeeded;
            a.to = base.cost_model().holding(x).id;
            a.amount = vx;
            a.cost = base.price(ActionKind::BuyNeeded, -1, x, vx);
            out.push_back({std::move(a), std::move(nxt)});
        }
    }
    for (int x = 0; x < n; ++x) {
        if (s.u[x] <= 0 || !base.transferable(x))
            continue;
        for (int y = 0; y < n; ++y) {
            Money vy = s.v[y];
            if (vy <= 0 || !base.transferable(y))
                continue;
            if (ctx.holding_currency(x) != ctx.holding_currency(y))
                continue;
            Action a;
            a.from = base.cost_model().holding(x).id;
            a.to = base.cost_model().holding(y).id;
            CurrencyState nxt = s;
            if (vy - s.u[x] > 0) {
                a.kind = ActionKind::SwitchAvailable;
                a.amount = s.u[x];
                nxt.u[x] = 0;
                nxt.v[y] = vy - a.amount;
            } else {
                a.kind = ActionKind::SwitchNeeded;
                a.amount = vy;
                nxt.u[x] = s.u[x] - vy;
                nxt.v[y] = 0;
            }
            a.cost = base.price(a.kind, x, y, a.amount);
            out.push_back({std::move(a), std::move(nxt)});
        }
    }
    auto fx = exchange_successors(s, ctx);
    out.insert(out.end(), std::make_move_iterator(fx.begin()),
               std::make_move_iterator(fx.end()));
    return out;
}

/// h_fee with exchanges treated as free: still a lower bound.
inline Money fx_h_fee(const CurrencyState &s, const FxContext &ctx) {
    statespace::State proxy;
    proxy.u = s.u;
    proxy.v = s.v;
    proxy.w = 0;
    return statespace::h_fee_refined(proxy, ctx.base());
}

inline int fx_h_count(const CurrencyState &s) {
    int out = 0, in = 0;
    for (Money m : s.u)
        out += m > 0;
    for (Money m : s.v)
        in += m > 0;
    return std::max(out, in);
}

struct FxValidation {
    bool valid = false;
    bool goal_reached = false;
    std::optional<std::string> first_violation;
    Money recomputed_cost = 0;
    std::map<std::string, Money> final_balances;
};

/// Replays an fx plan step by step against the currency state model.
inline FxValidation validate_fx_plan(const CurrencyTask &task, const FxPlan &plan) {
    FxContext ctx(task);
    FxValidation rep;
    CurrencyState s = initial_currency_state(ctx);
    for (const FxStep &step : plan.steps) {
        bool matched = false;
        for (FxSuccessor &succ : fx_successors(s, ctx)) {
            if (succ.step == step) {
                s = succ.state;
                rep.recomputed_cost += std::visit([](const auto &a) { return a.cost; }, step);
                matched = true;
                break;
            }
        }
        if (!matched) {
            rep.first_violation =
                std::visit([](const auto &a) { return a.describe(); }, step) +
                ": not applicable in the reached state";
            return rep;
        }
    }
    rep.goal_reached = is_goal(s);
    rep.valid = rep.goal_reached;
    if (!rep.valid && !rep.first_violation)
        rep.first_violation = "plan ends before clearing all pending flows";
    for (std::size_t c = 0; c < ctx.currencies().size(); ++c)
        rep.final_balances[ctx.currencies()[c]] = s.balances[c];
    return rep;
}

struct FxSearchResult {
    std::optional<FxPlan> plan;
    bool optimal = false;
    std::int64_t generated_nodes = 0;
    std::int64_t expanded_nodes = 0;
};

/// A* over the currency state model with the exchange-free heuristic.
inline FxSearchResult fx_astar(const CurrencyTask &task,
                               const search::SearchLimits &limits = {}) {
    FxContext ctx(task);
    FxSearchResult result;

    struct Node {
        CurrencyState state;
        search::LexCost g;
        std::int32_t parent;
        FxStep step;
    };
    struct Entry {
        search::LexCost f;
        Money h_fee;
        std::int64_t seq;
        std::int32_t node;
    };
    struct EntryWorse {
        bool operator()(const Entry &a, const Entry &b) const {
            if (!(a.f == b.f))
                return b.f < a.f;
            if (a.h_fee != b.h_fee)
                return a.h_fee > b.h_fee;
            return a.seq > b.seq;
        }
    };

    std::vector<Node> arena;
    std::priority_queue<Entry, std::vector<Entry>, EntryWorse> open;
    std::unordered_map<CurrencyState, search::LexCost, CurrencyStateHash> best;
    std::int64_t seq = 0;

    CurrencyState init = initial_currency_state(ctx);
    arena.push_back({init, {0, 0}, -1, Action{}});
    best.emplace(init, search::LexCost{0, 0});
    open.push({{fx_h_fee(init, ctx), fx_h_count(init)}, fx_h_fee(init, ctx), seq++, 0});

    while (!open.empty()) {
        if (result.generated_nodes >= limits.max_generated_nodes)
            break;
        Entry e = open.top();
        open.pop();
        Node node = arena[e.node];
        auto bit = best.find(node.state);
        if (bit == best.end() || bit->second < node.g)
            continue;
        ++result.expanded_nodes;
        if (is_goal(node.state)) {
            FxPlan plan;
            std::vector<FxStep> steps;
            for (std::int32_t at = e.node; arena[at].parent >= 0; at = arena[at].parent)
                steps.push_back(arena[at].step);
            std::reverse(steps.begin(), steps.end());
            for (FxStep &s2 : steps)
                plan.push(std::move(s2));
            result.plan = std::move(plan);
            result.optimal = true;
            return result;
        }
        for (FxSuccessor &succ : fx_successors(node.state, ctx)) {
            ++result.generated_nodes;
            Money cost = std::visit([](const auto &a) { return a.cost; }, succ.step);
            search::LexCost g = node.g + search::LexCost{cost, 1};
            auto [it, inserted] = best.try_emplace(succ.state, g);
            if (!inserted) {
                if (!(g < it->second))
                    continue;
                it->second = g;
            }
            arena.push_back({succ.state, g, e.node, std::move(succ.step)});
            Money hf = fx_h_fee(succ.state, ctx);
            open.push({g + search::LexCost{hf, fx_h_count(succ.state)}, hf, seq++,
                       static_cast<std::int32_t>(arena.size() - 1)});
        }
    }
    return result;
}

/// Baseline for multi-currency tasks: sell everything, exchange per pending
/// inflow where its currency is short, then buy.
inline FxPlan fx_naive(const CurrencyTask &task) {
    FxContext ctx(task);
    CurrencyState s = initial_currency_state(ctx);
    FxPlan plan;
    auto step = [&](const FxStep &want) {
        for (FxSuccessor &succ : fx_successors(s, ctx))
            if (succ.step == want) {
                s = succ.state;
                plan.push(want);
                return;
            }
        throw std::domain_error("naive fx plan step not applicable: " +
                                std::visit([](const auto &a) { return a.describe(); }, want));
    };
    const CostModel &cm = task.base.cost_model;
    for (auto &[id, amount] : task.base.outflows) {
        Action a;
        a.kind = ActionKind::Sell;
        a.from = id;
        a.amount = amount;
        a.cost = price_action(a.kind, a.from, a.to, amount, cm);
        step(a);
    }
    for (auto &[id, amount] : task.base.inflows) {
        std::size_t x = cm.index_of(id);
        std::size_t c = ctx.holding_currency(x);
        Money needed = amount - s.balances[c];
        if (needed > 0) {
            bool covered = false;
            for (std::size_t a = 0; a < ctx.currencies().size() && !covered; ++a) {
                if (a == c || s.balances[a] <= 0)
                    continue;
                auto src = ctx.source_for(a, c, needed, s.balances[a]);
                if (!src)
                    continue;
                ExchangeAction ex;
                ex.kind = ExchangeKind::Needed;
                ex.from_currency = ctx.currencies()[a];
                ex.to_currency = ctx.currencies()[c];
                ex.source_amount = *src;
                ex.received = ctx.net_convert(a, c, *src);
                ex.cost = ctx.exchange_fee(*src);
                ex.target = id;
                step(ex);
                covered = true;
            }
            if (!covered)
                throw std::domain_error("cannot fund inflow " + id +
                                        " from any single cash balance");
        }
        Action a;
        a.kind = ActionKind::BuyNeeded;
        a.to = id;
        a.amount = amount;
        a.cost = price_action(a.kind, a.from, a.to, amount, cm);
        step(a);
    }
    if (!is_goal(s))
        throw std::domain_error("naive fx plan failed to reach the goal");
    return plan;
}

} // namespace rebal::forex
