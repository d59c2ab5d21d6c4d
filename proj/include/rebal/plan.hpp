#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "rebal/task.hpp"

namespace rebal {

/// The five transaction operators. AVAILABLE variants move the whole amount
/// at hand (cash for buys, the pending outflow for switches); NEEDED
/// variants move exactly what the destination still requires.
enum class ActionKind {
    Sell,
    BuyAvailable,
    BuyNeeded,
    SwitchAvailable,
    SwitchNeeded,
};

inline const char *to_string(ActionKind k) {
    switch (k) {
    case ActionKind::Sell: return "SELL";
    case ActionKind::BuyAvailable: return "BUY-AVAILABLE";
    case ActionKind::BuyNeeded: return "BUY-NEEDED";
    case ActionKind::SwitchAvailable: return "SWITCH-AVAILABLE";
    case ActionKind::SwitchNeeded: return "SWITCH-NEEDED";
    }
    return "?";
}

inline bool is_buy(ActionKind k) {
    return k == ActionKind::BuyAvailable || k == ActionKind::BuyNeeded;
}
inline bool is_switch(ActionKind k) {
    return k == ActionKind::SwitchAvailable || k == ActionKind::SwitchNeeded;
}

struct Action {
    ActionKind kind = ActionKind::Sell;
    std::optional<std::string> from; // SELL and SWITCH_*
    std::optional<std::string> to;   // BUY_* and SWITCH_*
    Money amount = 0;
    Money cost = 0;

    friend bool operator==(const Action &a, const Action &b) {
        return a.kind == b.kind && a.from == b.from && a.to == b.to &&
               a.amount == b.amount && a.cost == b.cost;
    }

    std::string describe() const {
        std::ostringstream os;
        os << to_string(kind) << ' ' << format_money(amount);
        if (from)
            os << ' ' << *from;
        if (to)
            os << (from ? " to " : " ") << *to;
        return os.str();
    }
};

/// An ordered, executable transaction sequence with its total fee.
struct Plan {
    std::vector<Action> actions;
    Money total_cost = 0;

    std::size_t length() const { return actions.size(); }

    void push(Action a) {
        total_cost += a.cost;
        actions.push_back(std::move(a));
    }

    friend bool operator==(const Plan &a, const Plan &b) {
        return a.total_cost == b.total_cost && a.actions == b.actions;
    }
};

/// Fee for a single transaction: fixed fees of the holdings touched plus
/// the variable rate applied to the amount, rounded half-to-even.
inline Money price_action(ActionKind kind, std::optional<std::size_t> from,
                          std::optional<std::size_t> to, Money amount,
                          const CostModel &cm) {
    if (amount <= 0)
        throw std::domain_error("priced action must move a positive amount");
    switch (kind) {
    case ActionKind::Sell:
        return cm.fixed_fee(*from) + bps_cost(cm.trade_fee(*from), amount);
    case ActionKind::BuyAvailable:
    case ActionKind::BuyNeeded:
        return cm.fixed_fee(*to) + bps_cost(cm.trade_fee(*to), amount);
    case ActionKind::SwitchAvailable:
    case ActionKind::SwitchNeeded:
        return cm.fixed_fee(*from) + cm.fixed_fee(*to) +
               bps_cost(cm.switch_fee(*from, *to), amount);
    }
    throw std::logic_error("unreachable");
}

inline Money price_action(ActionKind kind, const std::optional<std::string> &from,
                          const std::optional<std::string> &to, Money amount,
                          const CostModel &cm) {
    std::optional<std::size_t> fi, ti;
    if (from)
        fi = cm.index_of(*from);
    if (to)
        ti = cm.index_of(*to);
    return price_action(kind, fi, ti, amount, cm);
}

struct ValidationReport {
    bool valid = false;
    bool goal_reached = false;
    std::optional<std::string> first_violation;
    Money recomputed_cost = 0;
    Money final_cash = 0;
};

namespace detail {

/// Mutable replay of the operator semantics over (u, v, w). Also used by the
/// state-space successor generator so the transition arithmetic lives once.
struct Replay {
    FlowMap u;
    FlowMap v;
    Money w = 0;

    static Replay initial(const UpdateTask &task) {
        return Replay{task.outflows, task.inflows, task.initial_cash};
    }

    Money pending_out(const std::string &id) const {
        auto it = u.find(id);
        return it == u.end() ? 0 : it->second;
    }
    Money pending_in(const std::string &id) const {
        auto it = v.find(id);
        return it == v.end() ? 0 : it->second;
    }
    bool at_goal() const { return u.empty() && v.empty(); }

    /// Applies `a` if its precondition holds and its amount equals the
    /// canonical operator amount; returns an error description otherwise.
    std::optional<std::string> apply(const Action &a, const CostModel &cm) {
        auto fail = [&](const std::string &why) {
            return a.describe() + ": " + why;
        };
        if (a.amount <= 0)
            return fail("non-positive amount");
        switch (a.kind) {
        case ActionKind::Sell: {
            if (!a.from || a.to)
                return fail("SELL takes only a source holding");
            Money ux = pending_out(*a.from);
            if (ux <= 0)
                return fail("no pending outflow");
            if (a.amount != ux)
                return fail("amount differs from pending outflow " + format_money(ux));
            u.erase(*a.from);
            w += ux;
            return std::nullopt;
        }
        case ActionKind::BuyAvailable: {
            if (!a.to || a.from)
                return fail("BUY takes only a destination holding");
            Money vx = pending_in(*a.to);
            if (vx <= 0)
                return fail("no pending inflow");
            if (w <= 0)
                return fail("no cash available");
            if (vx - w <= 0)
                return fail("cash covers the inflow; BUY-NEEDED applies");
            if (a.amount != w)
                return fail("amount differs from cash balance " + format_money(w));
            v[*a.to] = vx - w;
            w = 0;
            return std::nullopt;
        }
        case ActionKind::BuyNeeded: {
            if (!a.to || a.from)
                return fail("BUY takes only a destination holding");
            Money vx = pending_in(*a.to);
            if (vx <= 0)
                return fail("no pending inflow");
            if (w - vx < 0)
                return fail("cash balance " + format_money(w) + " short of inflow");
            if (a.amount != vx)
                return fail("amount differs from pending inflow " + format_money(vx));
            v.erase(*a.to);
            w -= vx;
            return std::nullopt;
        }
        case ActionKind::SwitchAvailable:
        case ActionKind::SwitchNeeded: {
            if (!a.from || !a.to)
                return fail("SWITCH takes source and destination");
            std::size_t fi = cm.index_of(*a.from), ti = cm.index_of(*a.to);
            if (!cm.transferable(fi) || !cm.transferable(ti))
                return fail("switch on a non-transferable holding");
            Money ux = pending_out(*a.from);
            Money vy = pending_in(*a.to);
            if (ux <= 0)
                return fail("no pending outflow");
            if (vy <= 0)
                return fail("no pending inflow");
            if (a.kind == ActionKind::SwitchAvailable) {
                if (vy - ux <= 0)
                    return fail("outflow covers the inflow; SWITCH-NEEDED applies");
                if (a.amount != ux)
                    return fail("amount differs from pending outflow " + format_money(ux));
                u.erase(*a.from);
                v[*a.to] = vy - ux;
            } else {
                if (ux - vy < 0)
                    return fail("pending outflow short of inflow");
                if (a.amount != vy)
                    return fail("amount differs from pending inflow " + format_money(vy));
                v.erase(*a.to);
                if (ux == vy)
                    u.erase(*a.from);
                else
                    u[*a.from] = ux - vy;
            }
            return std::nullopt;
        }
        }
        return fail("unknown action kind");
    }
};

} // namespace detail

/// Replays `plan` from the task's initial flows. Failures are reported, not
/// thrown; `valid` requires every precondition to hold and the goal state
/// (no pending flows) to be reached.
inline ValidationReport validate_plan(const UpdateTask &task, const Plan &plan) {
    ValidationReport report;
    auto replay = detail::Replay::initial(task);
    for (const Action &a : plan.actions) {
        if (auto err = replay.apply(a, task.cost_model)) {
            report.first_violation = err;
            report.final_cash = replay.w;
            return report;
        }
        report.recomputed_cost +=
            price_action(a.kind, a.from, a.to, a.amount, task.cost_model);
    }
    report.goal_reached = replay.at_goal();
    report.final_cash = replay.w;
    report.valid = report.goal_reached;
    if (!report.goal_reached && !report.first_violation)
        report.first_violation = "plan ends before clearing all pending flows";
    return report;
}

} // namespace rebal
