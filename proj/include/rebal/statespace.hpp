#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <vector>

#include "rebal/plan.hpp"

namespace rebal::statespace {

/// Search-node payload: pending outflows u, pending inflows v, and the cash
/// balance w. Stored densely over the task's holding indices; a zero entry
/// and an absent entry are the same thing, so equal states compare and hash
/// equal by construction.
struct State {
    std::vector<Money> u;
    std::vector<Money> v;
    Money w = 0;

    friend bool operator==(const State &a, const State &b) {
        return a.w == b.w && a.u == b.u && a.v == b.v;
    }

    Money pending_out_total() const {
        return std::accumulate(u.begin(), u.end(), Money{0});
    }
    Money pending_in_total() const {
        return std::accumulate(v.begin(), v.end(), Money{0});
    }
};

struct StateHash {
    std::size_t operator()(const State &s) const {
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
        mix(static_cast<std::uint64_t>(s.w));
        return static_cast<std::size_t>(h);
    }
};

/// Ground action over holding indices, cheap to copy during search.
struct GroundAction {
    ActionKind kind;
    int from = -1; // holding index, -1 when absent
    int to = -1;
    Money amount = 0;
    Money cost = 0;

    Action to_action(const CostModel &cm) const {
        Action a;
        a.kind = kind;
        if (from >= 0)
            a.from = cm.holding(from).id;
        if (to >= 0)
            a.to = cm.holding(to).id;
        a.amount = amount;
        a.cost = cost;
        return a;
    }
};

struct Successor {
    GroundAction action;
    State state;
};

/// Precompiled per-task tables used by successor generation and the
/// heuristics: transferability, fee rates, C_min, and whether every fee
/// product on the task's amount lattice is an exact integer (in which case
/// h_fee needs no rounding slack).
class TaskContext {
public:
    explicit TaskContext(const UpdateTask &task) : task_(&task) {
        task.check();
        const CostModel &cm = task.cost_model;
        n_ = cm.size();
        transferable_.resize(n_);
        fixed_.resize(n_);
        trade_.resize(n_);
        for (std::size_t i = 0; i < n_; ++i) {
            transferable_[i] = cm.transferable(i);
            fixed_[i] = cm.fixed_fee(i);
            trade_[i] = cm.trade_fee(i);
        }
        switch_.assign(n_ * n_, Bps(0));
        for (std::size_t x = 0; x < n_; ++x)
            for (std::size_t y = 0; y < n_; ++y)
                if (x != y && transferable_[x] && transferable_[y])
                    switch_[x * n_ + y] = cm.switch_fee(x, y);

        // C_min(x) = min(C_K(x), min over transferable partners of C_S(x, .)).
        cmin_.resize(n_);
        for (std::size_t x = 0; x < n_; ++x) {
            Bps best = trade_[x];
            if (transferable_[x])
                for (std::size_t y = 0; y < n_; ++y)
                    if (y != x && transferable_[y])
                        best = min(best, switch_[x * n_ + y]);
            cmin_[x] = best;
        }

        // Lattice step of every reachable amount: gcd of initial flows and cash.
        Money g = task.initial_cash;
        for (auto &[id, a] : task.outflows)
            g = std::gcd(g, a);
        for (auto &[id, a] : task.inflows)
            g = std::gcd(g, a);
        granularity_ = g;
        exact_pricing_ = granularity_ > 0;
        if (exact_pricing_) {
            for (std::size_t x = 0; x < n_ && exact_pricing_; ++x) {
                if (!bps_exact(trade_[x], granularity_))
                    exact_pricing_ = false;
                if (transferable_[x])
                    for (std::size_t y = 0; y < n_ && exact_pricing_; ++y)
                        if (y != x && transferable_[y] &&
                            !bps_exact(switch_[x * n_ + y], granularity_))
                            exact_pricing_ = false;
            }
        }
    }

    const UpdateTask &task() const { return *task_; }
    const CostModel &cost_model() const { return task_->cost_model; }
    std::size_t size() const { return n_; }
    bool transferable(std::size_t i) const { return transferable_[i]; }
    Money fixed_fee(std::size_t i) const { return fixed_[i]; }
    const Bps &trade_fee(std::size_t i) const { return trade_[i]; }
    const Bps &switch_fee(std::size_t x, std::size_t y) const { return switch_[x * n_ + y]; }
    const Bps &cmin(std::size_t x) const { return cmin_[x]; }
    Money granularity() const { return granularity_; }
    bool exact_pricing() const { return exact_pricing_; }

    Money price(ActionKind kind, int from, int to, Money amount) const {
        switch (kind) {
        case ActionKind::Sell:
            return fixed_[from] + bps_cost(trade_[from], amount);
        case ActionKind::BuyAvailable:
        case ActionKind::BuyNeeded:
            return fixed_[to] + bps_cost(trade_[to], amount);
        case ActionKind::SwitchAvailable:
        case ActionKind::SwitchNeeded:
            return fixed_[from] + fixed_[to] + bps_cost(switch_[from * n_ + to], amount);
        }
        return 0;
    }

private:
    const UpdateTask *task_;
    std::size_t n_ = 0;
    std::vector<char> transferable_;
    std::vector<Money> fixed_;
    std::vector<Bps> trade_;
    std::vector<Bps> switch_;
    std::vector<Bps> cmin_;
    Money granularity_ = 0;
    bool exact_pricing_ = false;
};

/// I: the state holding the initial flows and cash.
inline State initial_state(const TaskContext &ctx) {
    State s;
    s.u.assign(ctx.size(), 0);
    s.v.assign(ctx.size(), 0);
    const CostModel &cm = ctx.cost_model();
    for (auto &[id, a] : ctx.task().outflows)
        s.u[cm.index_of(id)] = a;
    for (auto &[id, a] : ctx.task().inflows)
        s.v[cm.index_of(id)] = a;
    s.w = ctx.task().initial_cash;
    return s;
}

inline State initial_state(const UpdateTask &task) {
    return initial_state(TaskContext(task));
}

/// Goal: no pending flows. The cash balance is unconstrained.
inline bool is_goal(const State &s) {
    for (Money m : s.u)
        if (m != 0)
            return false;
    for (Money m : s.v)
        if (m != 0)
            return false;
    return true;
}

/// All applicable ground actions with their resulting states, in a fixed
/// deterministic order: sells, buys, then switches, by holding index.
inline std::vector<Successor> successors(const State &s, const TaskContext &ctx) {
    std::vector<Successor> out;
    const int n = static_cast<int>(ctx.size());
    for (int x = 0; x < n; ++x) {
        if (s.u[x] <= 0)
            continue;
        State nxt = s;
        Money amount = s.u[x];
        nxt.u[x] = 0;
        nxt.w += amount;
        out.push_back({{ActionKind::Sell, x, -1, amount,
                        ctx.price(ActionKind::Sell, x, -1, amount)},
                       std::move(nxt)});
    }
    for (int x = 0; x < n; ++x) {
        Money vx = s.v[x];
        if (vx <= 0)
            continue;
        if (s.w > 0 && vx - s.w > 0) {
            State nxt = s;
            nxt.v[x] = vx - s.w;
            Money amount = s.w;
            nxt.w = 0;
            out.push_back({{ActionKind::BuyAvailable, -1, x, amount,
                            ctx.price(ActionKind::BuyAvailable, -1, x, amount)},
                           std::move(nxt)});
        }
        if (s.w - vx >= 0) {
            State nxt = s;
            nxt.v[x] = 0;
            nxt.w = s.w - vx;
            out.push_back({{ActionKind::BuyNeeded, -1, x, vx,
                            ctx.price(ActionKind::BuyNeeded, -1, x, vx)},
                           std::move(nxt)});
        }
    }
    for (int x = 0; x < n; ++x) {
        if (s.u[x] <= 0 || !ctx.transferable(x))
            continue;
        for (int y = 0; y < n; ++y) {
            Money vy = s.v[y];
            if (vy <= 0 || !ctx.transferable(y))
                continue;
            if (vy - s.u[x] > 0) {
                State nxt = s;
                Money amount = s.u[x];
                nxt.u[x] = 0;
                nxt.v[y] = vy - amount;
                out.push_back({{ActionKind::SwitchAvailable, x, y, amount,
                                ctx.price(ActionKind::SwitchAvailable, x, y, amount)},
                               std::move(nxt)});
            } else { // u[x] - v[y] >= 0
                State nxt = s;
                nxt.u[x] = s.u[x] - vy;
                nxt.v[y] = 0;
                out.push_back({{ActionKind::SwitchNeeded, x, y, vy,
                                ctx.price(ActionKind::SwitchNeeded, x, y, vy)},
                               std::move(nxt)});
            }
        }
    }
    return out;
}

/// Admissible lower bound on the remaining fee cost.
///
/// Fixed part: every pending variable needs at least one transaction
/// touching its holding, so each pending holding's fixed fee is owed at
/// least once. Variable part: each unit leaving x pays at least C_min(x).
/// On tasks whose amount lattice prices exactly (every generated task),
/// the per-holding product is an exact integer and is used as is. Otherwise
/// half-to-even pricing can round each moving action down by up to 1/2 unit,
/// and u[x] can leave in at most 1 + (pending transferable inflow partners)
/// pieces, so that slack is subtracted before rounding the bound up.
inline Money h_fee(const State &s, const TaskContext &ctx) {
    const int n = static_cast<int>(ctx.size());
    Money h_fix = 0;
    for (int x = 0; x < n; ++x) {
        if (s.u[x] > 0)
            h_fix += ctx.fixed_fee(x);
        if (s.v[x] > 0)
            h_fix += ctx.fixed_fee(x);
    }
    Money h_rel = 0;
    for (int x = 0; x < n; ++x) {
        if (s.u[x] <= 0)
            continue;
        const Bps &c = ctx.cmin(x);
        if (c.is_zero())
            continue;
        if (ctx.exact_pricing()) {
            h_rel += bps_cost_floor(c, s.u[x]); // exact: floor == the product
            continue;
        }
        int pieces = 1;
        if (ctx.transferable(x))
            for (int y = 0; y < n; ++y)
                if (y != x && s.v[y] > 0 && ctx.transferable(y))
                    ++pieces;
        // ceil(c*u/10000 - pieces/2), clamped at zero
        auto num = detail::int128(c.num) * s.u[x] * 2 -
                   detail::int128(pieces) * c.den * 10000;
        if (num > 0)
            h_rel += detail::div_ceil(num, detail::int128(c.den) * 20000);
    }
    return h_fix + h_rel;
}

/// Admissible lower bound on the remaining transaction count: every action
/// clears at most one pending outflow and at most one pending inflow.
inline int h_count(const State &s) {
    int out = 0, in = 0;
    for (Money m : s.u)
        out += m > 0;
    for (Money m : s.v)
        in += m > 0;
    return std::max(out, in);
}

/// h_fee plus inflow-side claims that stay lower bounds when every fee
/// product on the task lattice is integral (all generated tasks):
///  - a non-transferable inflow can only be filled by buys, paying its own
///    trade rate per unit;
///  - fund inflows beyond the total pending fund outflow exceed the switch
///    capacity, so that volume must also arrive via buys; charging it
///    against the cheapest pending fund rates keeps the bound admissible.
/// The symmetric term charges fund outflow beyond the fund inflow capacity
/// with the gap between its trade rate and the already-counted C_min.
/// Without integral products, per-action rounding could undercut these
/// claims, so the plain h_fee is returned.
inline Money h_fee_refined(const State &s, const TaskContext &ctx) {
    if (!ctx.exact_pricing())
        return h_fee(s, ctx);
    const int n = static_cast<int>(ctx.size());

    // As in h_fee, but the per-unit departure rate minimises over the
    // pending switch partners only: pending inflows never reappear, so every
    // future switch target of x is pending now and the sharper minimum stays
    // a lower bound.
    Money h_fix = 0;
    Money extra = 0;
    Money fund_out = 0, fund_in = 0;
    std::vector<Bps> depart(static_cast<std::size_t>(n));
    for (int x = 0; x < n; ++x) {
        if (s.u[x] > 0)
            h_fix += ctx.fixed_fee(x);
        if (s.v[x] > 0)
            h_fix += ctx.fixed_fee(x);
        if (s.v[x] > 0) {
            if (ctx.transferable(x))
                fund_in += s.v[x];
            else
                extra += bps_cost_floor(ctx.trade_fee(x), s.v[x]);
        }
        if (s.u[x] <= 0)
            continue;
        Bps rate = ctx.trade_fee(x);
        if (ctx.transferable(x)) {
            fund_out += s.u[x];
            for (int y = 0; y < n; ++y)
                if (y != x && s.v[y] > 0 && ctx.transferable(y))
                    rate = min(rate, ctx.switch_fee(x, y));
        }
        depart[static_cast<std::size_t>(x)] = rate;
        extra += bps_cost_floor(rate, s.u[x]);
    }

    if (fund_in > fund_out) {
        // forced fund buys, charged at the cheapest pending fund-in rates
        Money forced = fund_in - fund_out;
        std::vector<int> ins;
        for (int y = 0; y < n; ++y)
            if (s.v[y] > 0 && ctx.transferable(y))
                ins.push_back(y);
        std::sort(ins.begin(), ins.end(), [&](int a, int b) {
            if (!(ctx.trade_fee(a) == ctx.trade_fee(b)))
                return ctx.trade_fee(a) < ctx.trade_fee(b);
            return a < b;
        });
        for (int y : ins) {
            if (forced <= 0)
                break;
            Money take = std::min(forced, s.v[y]);
            extra += bps_cost_floor(ctx.trade_fee(y), take);
            forced -= take;
        }
    } else if (fund_out > fund_in) {
        // forced fund sells: their trade rate exceeds the counted departure rate
        Money forced = fund_out - fund_in;
        std::vector<std::pair<Bps, int>> outs; // (trade-minus-departure residue, holding)
        for (int x = 0; x < n; ++x)
            if (s.u[x] > 0 && ctx.transferable(x))
                outs.push_back({ctx.trade_fee(x) - depart[static_cast<std::size_t>(x)], x});
        std::sort(outs.begin(), outs.end(), [](const auto &a, const auto &b) {
            if (!(a.first == b.first))
                return a.first < b.first;
            return a.second < b.second;
        });
        for (auto &[residue, x] : outs) {
            if (forced <= 0)
                break;
            Money take = std::min(forced, s.u[x]);
            extra += bps_cost_floor(residue, take);
            forced -= take;
        }
    }
    Money plain = h_fee(s, ctx);
    Money refined = h_fix + extra;
    return refined > plain ? refined : plain;
}

} // namespace rebal::statespace
