#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <stdexcept>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "rebal/statespace.hpp"

namespace rebal::search {

using statespace::GroundAction;
using statespace::State;
using statespace::StateHash;
using statespace::Successor;
using statespace::TaskContext;

/// Plans are compared by fee cost first, transaction count second.
struct LexCost {
    Money fee = 0;
    std::int64_t len = 0;

    friend bool operator==(const LexCost &a, const LexCost &b) {
        return a.fee == b.fee && a.len == b.len;
    }
    friend bool operator<(const LexCost &a, const LexCost &b) {
        if (a.fee != b.fee)
            return a.fee < b.fee;
        return a.len < b.len;
    }
    friend bool operator<=(const LexCost &a, const LexCost &b) { return !(b < a); }
    friend LexCost operator+(const LexCost &a, const LexCost &b) {
        return {a.fee + b.fee, a.len + b.len};
    }
};

struct SearchLimits {
    std::int64_t max_generated_nodes = 100000;
    std::optional<int> max_depth;
};

struct FirstSolution {
    Money cost = 0;
    std::int64_t length = 0;
    std::int64_t generated_nodes = 0;
};

struct SearchResult {
    std::optional<Plan> plan;
    bool optimal = false;
    std::int64_t generated_nodes = 0;
    std::int64_t expanded_nodes = 0;
    std::optional<FirstSolution> first_solution;
    // re-expansions whose g was not lexicographically smaller than the
    // previous expansion of the same state; must stay zero
    std::int64_t nonimproving_reexpansions = 0;
};

/// Baseline: sell every pending outflow, then buy every pending inflow.
inline Plan naive_plan(const UpdateTask &task) {
    task.check();
    const CostModel &cm = task.cost_model;
    Plan plan;
    for (auto &[id, amount] : task.outflows) {
        Action a;
        a.kind = ActionKind::Sell;
        a.from = id;
        a.amount = amount;
        a.cost = price_action(a.kind, a.from, a.to, amount, cm);
        plan.push(std::move(a));
    }
    for (auto &[id, amount] : task.inflows) {
        Action a;
        a.kind = ActionKind::BuyNeeded;
        a.to = id;
        a.amount = amount;
        a.cost = price_action(a.kind, a.from, a.to, amount, cm);
        plan.push(std::move(a));
    }
    return plan;
}

namespace detail {

inline Plan extract_plan(const std::vector<GroundAction> &actions, const CostModel &cm) {
    Plan plan;
    for (const GroundAction &ga : actions)
        plan.push(ga.to_action(cm));
    return plan;
}

} // namespace detail

/// Complete enumeration of the reachable state graph with duplicate-state
/// memoisation; no heuristic, no bound pruning. The reference optimum for
/// everything else in this module. Guarded to small tasks.
class ExhaustiveOracle {
public:
    struct Completion {
        LexCost cost;
        GroundAction best{};
        bool at_goal = true;
    };

    explicit ExhaustiveOracle(const UpdateTask &task) : ctx_(task) {
        if (task.outflows.size() + task.inflows.size() > kMaxFlows)
            throw std::domain_error("exhaustive oracle limited to tasks with at most " +
                                    std::to_string(kMaxFlows) + " flows");
    }

    const TaskContext &context() const { return ctx_; }

    /// Lexicographically minimal (fee, length) completion from `s`.
    const Completion &completion(const State &s) {
        auto it = memo_.find(s);
        if (it != memo_.end())
            return it->second;
        Completion result;
        if (!statespace::is_goal(s)) {
            bool first = true;
            for (Successor &succ : statespace::successors(s, ctx_)) {
                const Completion &sub = completion(succ.state);
                LexCost cand = LexCost{succ.action.cost, 1} + sub.cost;
                if (first || cand < result.cost) {
                    result.cost = cand;
                    result.best = succ.action;
                    result.at_goal = false;
                    first = false;
                }
            }
            if (first)
                throw std::logic_error("dead end in state graph"); // cannot happen on valid tasks
        }
        return memo_.emplace(s, std::move(result)).first->second;
    }

    Plan plan_from(State s) {
        std::vector<GroundAction> actions;
        while (true) {
            const Completion &c = completion(s);
            if (c.at_goal)
                break;
            actions.push_back(c.best);
            s = apply(s, c.best);
        }
        return detail::extract_plan(actions, ctx_.cost_model());
    }

    Plan plan() { return plan_from(statespace::initial_state(ctx_)); }

    std::size_t states_explored() const { return memo_.size(); }

    static constexpr std::size_t kMaxFlows = 8;

private:
    State apply(const State &s, const GroundAction &ga) const {
        for (Successor &succ : statespace::successors(s, ctx_))
            if (succ.action.kind == ga.kind && succ.action.from == ga.from &&
                succ.action.to == ga.to)
                return succ.state;
        throw std::logic_error("oracle action not applicable");
    }

    TaskContext ctx_;
    std::unordered_map<State, Completion, StateHash> memo_;
};

/// Fee-optimal, length-minimal plan for a small task.
inline Plan exhaustive_oracle(const UpdateTask &task) {
    return ExhaustiveOracle(task).plan();
}

/// A* over (g_fee + h_fee, g_len + h_count). Both heuristic components are
/// admissible lower bounds, so the first goal popped is lexicographically
/// optimal. h_fee is not known to be consistent, so closed states are
/// reopened when reached with a lexicographically smaller g.
inline SearchResult astar_fee(const UpdateTask &task, const SearchLimits &limits = {}) {
    TaskContext ctx(task);
    SearchResult result;

    struct Node {
        State state;
        LexCost g;
        std::int32_t parent;
        GroundAction action;
    };
    struct Entry {
        LexCost f;
        Money h_fee; // tie-break: lower h first
        std::int64_t seq;
        std::int32_t node;
    };
    struct EntryWorse {
        bool operator()(const Entry &a, const Entry &b) const {
            if (!(a.f == b.f))
                return b.f < a.f;
            if (a.h_fee != b.h_fee)
                return a.h_fee > b.h_fee;
            return a.seq > b.seq; // FIFO among full ties
        }
    };

    std::vector<Node> arena;
    std::priority_queue<Entry, std::vector<Entry>, EntryWorse> open;
    struct Best {
        LexCost g;
        bool expanded = false;
        LexCost expanded_g;
    };
    std::unordered_map<State, Best, StateHash> best;
    std::int64_t seq = 0;

    State init = statespace::initial_state(ctx);
    arena.push_back({init, LexCost{0, 0}, -1, GroundAction{}});
    best[init] = {LexCost{0, 0}, false, {}};
    open.push({LexCost{statespace::h_fee_refined(init, ctx), statespace::h_count(init)},
               statespace::h_fee_refined(init, ctx), seq++, 0});

    while (!open.empty()) {
        if (result.generated_nodes >= limits.max_generated_nodes)
            break;
        Entry e = open.top();
        open.pop();
        Node node = arena[e.node];
        auto bit = best.find(node.state);
        if (bit == best.end() || bit->second.g < node.g)
            continue; // stale entry superseded by a cheaper path
        ++result.expanded_nodes;
        if (bit->second.expanded && !(node.g < bit->second.expanded_g))
            ++result.nonimproving_reexpansions;
        bit->second.expanded = true;
        bit->second.expanded_g = node.g;

        if (statespace::is_goal(node.state)) {
            std::vector<GroundAction> actions;
            for (std::int32_t at = e.node; arena[at].parent >= 0; at = arena[at].parent)
                actions.push_back(arena[at].action);
            std::reverse(actions.begin(), actions.end());
            result.plan = detail::extract_plan(actions, ctx.cost_model());
            result.optimal = true;
            result.first_solution = FirstSolution{result.plan->total_cost,
                                                  static_cast<std::int64_t>(result.plan->length()),
                                                  result.generated_nodes};
            return result;
        }

        for (Successor &succ : statespace::successors(node.state, ctx)) {
            ++result.generated_nodes;
            LexCost g = node.g + LexCost{succ.action.cost, 1};
            auto [it, inserted] = best.try_emplace(succ.state, Best{g, false, {}});
            if (!inserted) {
                if (!(g < it->second.g))
                    continue; // duplicate with no improvement
                it->second.g = g; // reopen
            }
            arena.push_back({succ.state, g, e.node, succ.action});
            Money hf = statespace::h_fee_refined(succ.state, ctx);
            LexCost f = g + LexCost{hf, statespace::h_count(succ.state)};
            open.push({f, hf, seq++, static_cast<std::int32_t>(arena.size() - 1)});
        }
    }
    result.optimal = false;
    return result;
}

/// Depth-first branch and bound. The depth limit is the naive plan's length
/// (one transaction per flow); the incumbent prunes lexicographically.
/// Successors are ordered switches, sells, buys, descending amount within
/// each group, which steers the first dive toward flow-clearing moves.
inline SearchResult dfbnb(const UpdateTask &task, const SearchLimits &limits = {}) {
    TaskContext ctx(task);
    SearchResult result;

    int depth_limit = static_cast<int>(task.outflows.size() + task.inflows.size());
    if (limits.max_depth)
        depth_limit = *limits.max_depth;

    std::optional<LexCost> incumbent;
    std::vector<GroundAction> path, best_path;
    bool exhausted = true;

    auto order_key = [](const GroundAction &a) {
        int group = is_switch(a.kind) ? 0 : (a.kind == ActionKind::Sell ? 1 : 2);
        return std::tuple<int, Money, int, int>(group, -a.amount, a.from, a.to);
    };

    State root = statespace::initial_state(ctx);

    std::function<void(const State &, LexCost, int)> dive = [&](const State &s,
                                                                LexCost g, int depth) {
        if (result.generated_nodes >= limits.max_generated_nodes) {
            exhausted = false;
            return;
        }
        if (statespace::is_goal(s)) {
            if (!incumbent || g < *incumbent) {
                incumbent = g;
                best_path = path;
                if (!result.first_solution)
                    result.first_solution =
                        FirstSolution{g.fee, g.len, result.generated_nodes};
            }
            return;
        }
        if (depth >= depth_limit)
            return;
        ++result.expanded_nodes;
        auto succs = statespace::successors(s, ctx);
        std::stable_sort(succs.begin(), succs.end(),
                         [&](const Successor &a, const Successor &b) {
                             return order_key(a.action) < order_key(b.action);
                         });
        for (Successor &succ : succs) {
            if (result.generated_nodes >= limits.max_generated_nodes) {
                exhausted = false;
                return;
            }
            ++result.generated_nodes;
            LexCost g2 = g + LexCost{succ.action.cost, 1};
            if (incumbent) {
                // a non-goal completion adds at least (0 fee, 1 action)
                LexCost reachable = statespace::is_goal(succ.state)
                                        ? g2
                                        : LexCost{g2.fee, g2.len + 1};
                if (!(reachable < *incumbent))
                    continue;
            }
            path.push_back(succ.action);
            dive(succ.state, g2, depth + 1);
            path.pop_back();
        }
    };

    dive(root, LexCost{0, 0}, 0);

    if (incumbent) {
        result.plan = detail::extract_plan(best_path, ctx.cost_model());
        result.optimal = exhausted;
    } else {
        result.optimal = false;
    }
    return result;
}

} // namespace rebal::search
