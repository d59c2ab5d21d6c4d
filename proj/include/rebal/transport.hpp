#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rebal/plan.hpp"

namespace rebal::lp {

enum class CellMode { Switch, Trade, Forbidden };

inline const char *to_string(CellMode m) {
    switch (m) {
    case CellMode::Switch: return "SWITCH";
    case CellMode::Trade: return "TRADE";
    case CellMode::Forbidden: return "FORBIDDEN";
    }
    return "?";
}

/// Balanced transportation instance. Real supply rows come from the task's
/// outflows (plus one cash row when the task starts with cash); real demand
/// columns from the inflows (plus one zero-cost surplus column when sources
/// exceed demands, which keeps the instance balanced). Costs are exact
/// rationals normalised to a shared denominator.
struct TransportInstance {
    std::vector<std::optional<std::string>> rows; // nullopt: cash supply
    std::vector<std::optional<std::string>> cols; // nullopt: surplus sink
    std::vector<Money> supplies;
    std::vector<Money> demands;
    std::vector<std::int64_t> cost_num; // row-major, scale: bps * cost_den
    std::int64_t cost_den = 1;
    std::vector<CellMode> mode;

    std::size_t n_rows() const { return rows.size(); }
    std::size_t n_cols() const { return cols.size(); }
    std::int64_t cost_at(std::size_t i, std::size_t j) const {
        return cost_num[i * n_cols() + j];
    }
    CellMode mode_at(std::size_t i, std::size_t j) const {
        return mode[i * n_cols() + j];
    }

    /// Marks a cell unusable: its cost is raised above the cost of moving
    /// the entire balance through the dearest regular cell, so no optimal
    /// solution touches it while a feasible alternative exists.
    void forbid(std::size_t i, std::size_t j) {
        mode[i * n_cols() + j] = CellMode::Forbidden;
        std::int64_t max_num = 1;
        for (std::size_t k = 0; k < mode.size(); ++k)
            if (mode[k] != CellMode::Forbidden)
                max_num = std::max(max_num, cost_num[k]);
        Money total = std::accumulate(supplies.begin(), supplies.end(), Money{0});
        std::int64_t big = detail::checked_i64(
            detail::int128(max_num) * std::max<Money>(total, 1) + 1, "big-M cost");
        for (std::size_t k = 0; k < mode.size(); ++k)
            if (mode[k] == CellMode::Forbidden)
                cost_num[k] = big;
    }
};

/// One positive assignment of the solved instance. `from` empty means the
/// amount is funded from initial cash; `to` empty means the amount is sold
/// and stays as cash.
struct FlowCell {
    std::optional<std::string> from;
    std::optional<std::string> to;
    Money amount = 0;
    CellMode mode = CellMode::Trade;
};

struct FlowMatrix {
    std::vector<FlowCell> cells;
    std::int64_t objective_num = 0; // scale: bps * objective_den
    std::int64_t objective_den = 1;
};

/// Multi-type cost pre-selection: a transferable pair costs the cheaper of
/// switching and trading both legs (ties prefer the switch — one transfer,
/// no exchange fees); any other pair trades. Fixed fees stay out of the
/// per-unit objective.
inline TransportInstance build_instance(const UpdateTask &task) {
    task.check();
    const CostModel &cm = task.cost_model;
    TransportInstance inst;
    for (auto &[id, amount] : task.outflows) {
        inst.rows.emplace_back(id);
        inst.supplies.push_back(amount);
    }
    if (task.initial_cash > 0) {
        inst.rows.emplace_back(std::nullopt);
        inst.supplies.push_back(task.initial_cash);
    }
    for (auto &[id, amount] : task.inflows) {
        inst.cols.emplace_back(id);
        inst.demands.push_back(amount);
    }
    Money surplus = task.total_outflow() + task.initial_cash - task.total_inflow();
    if (surplus > 0) {
        inst.cols.emplace_back(std::nullopt);
        inst.demands.push_back(surplus);
    }

    std::vector<Bps> rates;
    rates.reserve(inst.n_rows() * inst.n_cols());
    std::vector<CellMode> modes;
    for (std::size_t i = 0; i < inst.n_rows(); ++i) {
        for (std::size_t j = 0; j < inst.n_cols(); ++j) {
            if (!inst.cols[j]) { // sell-and-keep / keep cash: free
                rates.push_back(Bps(0));
                modes.push_back(CellMode::Trade);
                continue;
            }
            std::size_t tj = cm.index_of(*inst.cols[j]);
            if (!inst.rows[i]) { // buy from initial cash
                rates.push_back(cm.trade_fee(tj));
                modes.push_back(CellMode::Trade);
                continue;
            }
            std::size_t ti = cm.index_of(*inst.rows[i]);
            Bps trade = cm.trade_fee(ti) + cm.trade_fee(tj);
            if (cm.transferable(ti) && cm.transferable(tj)) {
                Bps sw = cm.switch_fee(ti, tj);
                if (sw <= trade) {
                    rates.push_back(sw);
                    modes.push_back(CellMode::Switch);
                    continue;
                }
            }
            rates.push_back(trade);
            modes.push_back(CellMode::Trade);
        }
    }

    std::int64_t den = 1;
    for (const Bps &r : rates)
        den = std::lcm(den, r.den);
    inst.cost_den = den;
    inst.cost_num.reserve(rates.size());
    for (const Bps &r : rates)
        inst.cost_num.push_back(detail::checked_i64(
            detail::int128(r.num) * (den / r.den), "transport cost scaling"));
    inst.mode = std::move(modes);
    return inst;
}

namespace detail2 {

/// Transportation simplex: Vogel initial basis, then MODI pivots with a
/// smallest-index entering rule (Bland) so degenerate instances terminate.
/// All arithmetic is exact and integral.
class Simplex {
public:
    explicit Simplex(const TransportInstance &inst)
        : inst_(inst), R_(inst.n_rows()), C_(inst.n_cols()) {
        Money total_supply = std::accumulate(inst.supplies.begin(), inst.supplies.end(), Money{0});
        Money total_demand = std::accumulate(inst.demands.begin(), inst.demands.end(), Money{0});
        if (total_supply != total_demand)
            throw std::invalid_argument("unbalanced transportation instance");
        flow_.assign(R_ * C_, 0);
        basic_.assign(R_ * C_, false);
        vogel_start();
        complete_basis();
        while (pivot_once())
            ;
    }

    FlowMatrix extract() const {
        FlowMatrix out;
        detail::int128 obj = 0;
        for (std::size_t i = 0; i < R_; ++i) {
            for (std::size_t j = 0; j < C_; ++j) {
                Money f = flow_[i * C_ + j];
                if (f <= 0)
                    continue;
                obj += detail::int128(inst_.cost_at(i, j)) * f;
                if (!inst_.rows[i] && !inst_.cols[j])
                    continue; // cash that stays cash is not a move
                out.cells.push_back({inst_.rows[i], inst_.cols[j], f, inst_.mode_at(i, j)});
            }
        }
        out.objective_num = detail::checked_i64(obj, "transport objective");
        out.objective_den = inst_.cost_den;
        return out;
    }

private:
    std::size_t idx(std::size_t i, std::size_t j) const { return i * C_ + j; }

    void vogel_start() {
        std::vector<Money> supply(inst_.supplies), demand(inst_.demands);
        std::vector<bool> row_done(R_, false), col_done(C_, false);
        std::size_t open_rows = R_, open_cols = C_;
        // R+C-1 allocations, each closing exactly one line, yield a forest
        // basis of the right size (some allocations may be zero).
        for (std::size_t alloc = 0; alloc + 1 < R_ + C_; ++alloc) {
            // penalty: gap between the two cheapest open cells of a line
            auto line_penalty = [&](bool is_row, std::size_t k) -> std::int64_t {
                std::int64_t lo = -1, lo2 = -1;
                std::size_t len = is_row ? C_ : R_;
                for (std::size_t t = 0; t < len; ++t) {
                    std::size_t i = is_row ? k : t, j = is_row ? t : k;
                    if (row_done[i] || col_done[j])
                        continue;
                    std::int64_t c = inst_.cost_at(i, j);
                    if (lo < 0 || c < lo) {
                        lo2 = lo;
                        lo = c;
                    } else if (lo2 < 0 || c < lo2) {
                        lo2 = c;
                    }
                }
                return lo < 0 ? -1 : (lo2 < 0 ? lo : lo2 - lo);
            };
            std::int64_t best_pen = -1;
            bool best_is_row = true;
            std::size_t best_line = 0;
            for (std::size_t i = 0; i < R_; ++i)
                if (!row_done[i])
                    if (std::int64_t p = line_penalty(true, i); p > best_pen) {
                        best_pen = p;
                        best_is_row = true;
                        best_line = i;
                    }
            for (std::size_t j = 0; j < C_; ++j)
                if (!col_done[j])
                    if (std::int64_t p = line_penalty(false, j); p > best_pen) {
                        best_pen = p;
                        best_is_row = false;
                        best_line = j;
                    }
            if (best_pen < 0)
                break; // no open cell left
            // cheapest open cell of the chosen line, smallest index on ties
            std::size_t bi = 0, bj = 0;
            std::int64_t bc = -1;
            std::size_t len = best_is_row ? C_ : R_;
            for (std::size_t t = 0; t < len; ++t) {
                std::size_t i = best_is_row ? best_line : t;
                std::size_t j = best_is_row ? t : best_line;
                if (row_done[i] || col_done[j])
                    continue;
                std::int64_t c = inst_.cost_at(i, j);
                if (bc < 0 || c < bc) {
                    bc = c;
                    bi = i;
                    bj = j;
                }
            }
            Money q = std::min(supply[bi], demand[bj]);
            flow_[idx(bi, bj)] = q;
            basic_[idx(bi, bj)] = true;
            supply[bi] -= q;
            demand[bj] -= q;
            if (supply[bi] == 0 && open_rows > 1) {
                row_done[bi] = true;
                --open_rows;
            } else if (demand[bj] == 0 && open_cols > 1) {
                col_done[bj] = true;
                --open_cols;
            } else if (supply[bi] == 0) {
                row_done[bi] = true;
                --open_rows;
            } else {
                col_done[bj] = true;
                --open_cols;
            }
        }
    }

    /// Union-find cycle test while adding zero cells until the basis spans.
    void complete_basis() {
        std::vector<std::size_t> parent(R_ + C_);
        std::iota(parent.begin(), parent.end(), 0);
        std::function<std::size_t(std::size_t)> find = [&](std::size_t a) {
            while (parent[a] != a)
                a = parent[a] = parent[parent[a]];
            return a;
        };
        std::size_t count = 0;
        for (std::size_t i = 0; i < R_; ++i)
            for (std::size_t j = 0; j < C_; ++j)
                if (basic_[idx(i, j)]) {
                    std::size_t a = find(i), b = find(R_ + j);
                    if (a == b) { // redundant zero allocation; drop from basis
                        if (flow_[idx(i, j)] == 0) {
                            basic_[idx(i, j)] = false;
                            continue;
                        }
                        throw std::logic_error("cyclic positive allocation from Vogel start");
                    }
                    parent[a] = b;
                    ++count;
                }
        for (std::size_t i = 0; i < R_ && count < R_ + C_ - 1; ++i)
            for (std::size_t j = 0; j < C_ && count < R_ + C_ - 1; ++j) {
                if (basic_[idx(i, j)])
                    continue;
                std::size_t a = find(i), b = find(R_ + j);
                if (a == b)
                    continue;
                parent[a] = b;
                basic_[idx(i, j)] = true;
                ++count;
            }
        if (count != R_ + C_ - 1)
            throw std::logic_error("could not complete transportation basis");
    }

    /// One MODI iteration; false when no negative reduced cost remains.
    bool pivot_once() {
        // potentials from the basis tree
        std::vector<std::int64_t> u(R_), v(C_);
        std::vector<bool> u_set(R_, false), v_set(C_, false);
        u[0] = 0;
        u_set[0] = true;
        bool progress = true;
        while (progress) {
            progress = false;
            for (std::size_t i = 0; i < R_; ++i)
                for (std::size_t j = 0; j < C_; ++j) {
                    if (!basic_[idx(i, j)])
                        continue;
                    if (u_set[i] && !v_set[j]) {
                        v[j] = inst_.cost_at(i, j) - u[i];
                        v_set[j] = true;
                        progress = true;
                    } else if (!u_set[i] && v_set[j]) {
                        u[i] = inst_.cost_at(i, j) - v[j];
                        u_set[i] = true;
                        progress = true;
                    }
                }
        }
        // entering cell: smallest index with negative reduced cost
        std::size_t ei = R_, ej = C_;
        for (std::size_t i = 0; i < R_ && ei == R_; ++i)
            for (std::size_t j = 0; j < C_; ++j) {
                if (basic_[idx(i, j)])
                    continue;
                if (inst_.cost_at(i, j) - u[i] - v[j] < 0) {
                    ei = i;
                    ej = j;
                    break;
                }
            }
        if (ei == R_)
            return false;

        // unique cycle through the entering cell in the basis tree
        std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(R_ + C_);
        for (std::size_t i = 0; i < R_; ++i)
            for (std::size_t j = 0; j < C_; ++j)
                if (basic_[idx(i, j)]) {
                    adj[i].push_back({R_ + j, idx(i, j)});
                    adj[R_ + j].push_back({i, idx(i, j)});
                }
        std::vector<int> prev_node(R_ + C_, -1), prev_edge(R_ + C_, -1);
        std::vector<std::size_t> stack{ei};
        prev_node[ei] = static_cast<int>(ei);
        while (!stack.empty()) {
            std::size_t at = stack.back();
            stack.pop_back();
            if (at == R_ + ej)
                break;
            for (auto [nb, edge] : adj[at]) {
                if (prev_node[nb] != -1)
                    continue;
                prev_node[nb] = static_cast<int>(at);
                prev_edge[nb] = static_cast<int>(edge);
                stack.push_back(nb);
            }
        }
        std::vector<std::size_t> cycle{idx(ei, ej)}; // + entering, then alternating
        for (std::size_t at = R_ + ej; at != ei;
             at = static_cast<std::size_t>(prev_node[at]))
            cycle.push_back(static_cast<std::size_t>(prev_edge[at]));

        // odd positions give up flow
        Money theta = -1;
        std::size_t leave = 0;
        for (std::size_t k = 1; k < cycle.size(); k += 2) {
            Money f = flow_[cycle[k]];
            if (theta < 0 || f < theta || (f == theta && cycle[k] < leave)) {
                theta = f;
                leave = cycle[k];
            }
        }
        for (std::size_t k = 0; k < cycle.size(); ++k) {
            if (k % 2 == 0)
                flow_[cycle[k]] += theta;
            else
                flow_[cycle[k]] -= theta;
        }
        basic_[idx(ei, ej)] = true;
        basic_[leave] = false;
        return true;
    }

    const TransportInstance &inst_;
    std::size_t R_, C_;
    std::vector<Money> flow_;
    std::vector<bool> basic_;
};

} // namespace detail2

/// Exact optimal basic solution of the balanced instance: at most
/// rows+cols-1 positive cells, integer amounts.
inline FlowMatrix solve_transport(const TransportInstance &inst) {
    if (inst.n_rows() == 0 || inst.n_cols() == 0) {
        Money supply = std::accumulate(inst.supplies.begin(), inst.supplies.end(), Money{0});
        Money demand = std::accumulate(inst.demands.begin(), inst.demands.end(), Money{0});
        if (supply != demand)
            throw std::invalid_argument("unbalanced transportation instance");
        return FlowMatrix{}; // a task with no flows has nothing to assign
    }
    return detail2::Simplex(inst).extract();
}

/// Post-processed view of a flow matrix: switch cells stay individual, all
/// trade amounts of a row collapse into one sell, all trade amounts of a
/// column into one buy.
struct GroupedFlows {
    std::vector<FlowCell> switches; // mode Switch, in row-major order
    FlowMap sells;                  // per source holding, trades + kept-cash
    FlowMap buys;                   // per destination holding, trades + cash-funded
};

inline GroupedFlows group_trades(const FlowMatrix &matrix) {
    GroupedFlows g;
    for (const FlowCell &cell : matrix.cells) {
        if (cell.mode == CellMode::Switch) {
            g.switches.push_back(cell);
            continue;
        }
        if (cell.from)
            g.sells[*cell.from] += cell.amount;
        if (cell.to)
            g.buys[*cell.to] += cell.amount;
    }
    return g;
}

struct TranslationStats {
    int fallback_switches = 0; // inexact switch executions (tie-shaped bases)
};

/// Turns grouped flows into an executable plan: trade-only rows sell first,
/// switch cells run when their amount equals the row's or the column's
/// remaining quantity (exact AVAILABLE/NEEDED semantics), rows sell their
/// remainder as their switches finish, and every column's leftover is bought
/// last from the accumulated cash.
inline Plan flows_to_plan(const UpdateTask &task, const FlowMatrix &matrix,
                          TranslationStats *stats = nullptr) {
    const CostModel &cm = task.cost_model;
    GroupedFlows grouped = group_trades(matrix);
    auto replay = rebal::detail::Replay::initial(task);
    Plan plan;

    auto emit = [&](ActionKind kind, std::optional<std::string> from,
                    std::optional<std::string> to, Money amount) {
        Action a;
        a.kind = kind;
        a.from = std::move(from);
        a.to = std::move(to);
        a.amount = amount;
        a.cost = price_action(kind, a.from, a.to, amount, cm);
        if (auto err = replay.apply(a, cm))
            throw std::logic_error("LP+ translation produced an invalid step: " + *err);
        plan.push(std::move(a));
    };

    struct Intent {
        std::string from, to;
        Money amount;
    };
    std::vector<Intent> intents;
    for (const FlowCell &cell : grouped.switches)
        intents.push_back({*cell.from, *cell.to, cell.amount});

    auto rows_with_intents = [&](const std::string &id) {
        for (const Intent &it : intents)
            if (it.from == id)
                return true;
        return false;
    };

    // sells of rows that have no switch leg
    for (auto &[id, amount] : task.outflows)
        if (!rows_with_intents(id))
            emit(ActionKind::Sell, id, std::nullopt, replay.pending_out(id));

    auto sell_if_done = [&](const std::string &row) {
        if (!rows_with_intents(row) && replay.pending_out(row) > 0)
            emit(ActionKind::Sell, row, std::nullopt, replay.pending_out(row));
    };

    while (!intents.empty()) {
        bool executed = false;
        for (std::size_t k = 0; k < intents.size(); ++k) {
            const Intent it = intents[k];
            Money ur = replay.pending_out(it.from);
            Money vr = replay.pending_in(it.to);
            bool exact_row = it.amount == ur && vr >= it.amount;
            bool exact_col = it.amount == vr && ur >= it.amount;
            if (!exact_row && !exact_col)
                continue;
            ActionKind kind = vr - ur > 0 ? ActionKind::SwitchAvailable
                                          : ActionKind::SwitchNeeded;
            emit(kind, it.from, it.to, kind == ActionKind::SwitchAvailable ? ur : vr);
            intents.erase(intents.begin() + static_cast<std::ptrdiff_t>(k));
            sell_if_done(it.from);
            executed = true;
            break;
        }
        if (executed)
            continue;
        // tie-shaped basis: run the first remaining cell at whatever quantity
        // the operators allow, then reconcile the rest against the residuals
        const Intent it = intents.front();
        intents.erase(intents.begin());
        Money ur = replay.pending_out(it.from);
        Money vr = replay.pending_in(it.to);
        if (ur > 0 && vr > 0) {
            if (stats)
                ++stats->fallback_switches;
            ActionKind kind = vr - ur > 0 ? ActionKind::SwitchAvailable
                                          : ActionKind::SwitchNeeded;
            emit(kind, it.from, it.to, kind == ActionKind::SwitchAvailable ? ur : vr);
        }
        for (std::size_t k = intents.size(); k-- > 0;) {
            Money u2 = replay.pending_out(intents[k].from);
            Money v2 = replay.pending_in(intents[k].to);
            if (u2 <= 0 || v2 <= 0)
                intents.erase(intents.begin() + static_cast<std::ptrdiff_t>(k));
            else
                intents[k].amount = std::min({intents[k].amount, u2, v2});
        }
        sell_if_done(it.from);
    }

    for (auto &[id, amount] : task.outflows)
        sell_if_done(id);
    for (auto &[id, amount] : task.inflows)
        if (Money vr = replay.pending_in(id); vr > 0)
            emit(ActionKind::BuyNeeded, std::nullopt, id, vr);

    if (!replay.at_goal())
        throw std::logic_error("LP+ translation left pending flows");
    return plan;
}

/// The LP line end to end: pre-selected instance, exact simplex, grouped
/// post-process, executable plan priced by the full cost model.
inline Plan lp_plus_plan(const UpdateTask &task, TranslationStats *stats = nullptr) {
    TransportInstance inst = build_instance(task);
    FlowMatrix matrix = solve_transport(inst);
    return flows_to_plan(task, matrix, stats);
}

} // namespace rebal::lp
