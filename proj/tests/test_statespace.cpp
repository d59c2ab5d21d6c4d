#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "fixtures.hpp"
#include "rebal/probgen.hpp"
#include "rebal/statespace.hpp"

using namespace rebal;
using namespace rebal::statespace;

namespace {

Money at(const State &s, const TaskContext &ctx, const std::string &id, bool out) {
    std::size_t i = ctx.cost_model().index_of(id);
    return out ? s.u[i] : s.v[i];
}

/// Random walk from the initial state; returns every visited state.
std::vector<State> random_walk_states(const TaskContext &ctx, probgen::Rng &rng,
                                      int walks) {
    std::vector<State> all;
    for (int w = 0; w < walks; ++w) {
        State s = initial_state(ctx);
        all.push_back(s);
        while (!is_goal(s)) {
            auto succ = successors(s, ctx);
            REQUIRE(!succ.empty());
            s = succ[static_cast<std::size_t>(
                         rng.uniform(0, static_cast<std::int64_t>(succ.size()) - 1))]
                    .state;
            all.push_back(s);
        }
    }
    return all;
}

} // namespace

TEST_CASE("initial state mirrors the task flows") {
    UpdateTask task = fixtures::reference_portfolio();
    TaskContext ctx(task);
    State s = initial_state(ctx);
    CHECK(at(s, ctx, "EQ", true) == 10930);
    CHECK(at(s, ctx, "BT", true) == 23110);
    CHECK(at(s, ctx, "GD", true) == 4110);
    CHECK(at(s, ctx, "MM", false) == 12690);
    CHECK(at(s, ctx, "GB", false) == 2790);
    CHECK(at(s, ctx, "EM", false) == 6085);
    CHECK(at(s, ctx, "RE", false) == 16585);
    CHECK(s.w == 0);
    CHECK(!is_goal(s));

    UpdateTask empty = fixtures::empty_task();
    CHECK(is_goal(initial_state(TaskContext(empty))));
}

TEST_CASE("cash-funded buy starts with the cash in the balance") {
    UpdateTask task;
    task.cost_model = CostModel({fixtures::fund("A", "A", 1)});
    task.inflows = {{"A", 500}};
    task.initial_cash = 500;
    TaskContext ctx(task);
    State s = initial_state(ctx);
    CHECK(s.u == std::vector<Money>{0});
    CHECK(s.v == std::vector<Money>{500});
    CHECK(s.w == 500);
}

TEST_CASE("goal ignores leftover cash") {
    UpdateTask task = fixtures::reference_portfolio();
    TaskContext ctx(task);
    State s = initial_state(ctx);
    std::fill(s.u.begin(), s.u.end(), 0);
    std::fill(s.v.begin(), s.v.end(), 0);
    s.w = 1760;
    CHECK(is_goal(s));
    s.v[ctx.cost_model().index_of("MM")] = 1760; // before the final buy
    CHECK(!is_goal(s));
}

TEST_CASE("successors follow the five operators") {
    UpdateTask task = fixtures::reference_portfolio();
    TaskContext ctx(task);
    State init = initial_state(ctx);

    bool saw_switch_eq_mm = false;
    for (const Successor &succ : successors(init, ctx)) {
        if (succ.action.kind == ActionKind::SwitchAvailable &&
            ctx.cost_model().holding(static_cast<std::size_t>(succ.action.from)).id == "EQ" &&
            ctx.cost_model().holding(static_cast<std::size_t>(succ.action.to)).id == "MM") {
            saw_switch_eq_mm = true;
            CHECK(succ.action.amount == 10930);
            CHECK(at(succ.state, ctx, "MM", false) == 1760);
            CHECK(at(succ.state, ctx, "EQ", true) == 0);
        }
        // no operator may increase a pending variable
        for (std::size_t i = 0; i < init.u.size(); ++i) {
            CHECK(succ.state.u[i] <= init.u[i]);
            CHECK(succ.state.v[i] <= init.v[i]);
        }
    }
    CHECK(saw_switch_eq_mm);

    // selling one ETF moves exactly its pending amount into cash
    State sell_state = initial_state(ctx);
    std::size_t bt = ctx.cost_model().index_of("BT");
    for (std::size_t i = 0; i < sell_state.u.size(); ++i)
        if (i != bt)
            sell_state.u[i] = 0;
    auto succ = successors(sell_state, ctx);
    auto it = std::find_if(succ.begin(), succ.end(), [&](const Successor &s2) {
        return s2.action.kind == ActionKind::Sell &&
               static_cast<std::size_t>(s2.action.from) == bt;
    });
    REQUIRE(it != succ.end());
    CHECK(it->state.w == 23110);
    CHECK(it->state.u[bt] == 0);

    // goal state has no successors
    State goal = initial_state(ctx);
    std::fill(goal.u.begin(), goal.u.end(), 0);
    std::fill(goal.v.begin(), goal.v.end(), 0);
    CHECK(successors(goal, ctx).empty());
}

TEST_CASE("equal quantities route to the needed variants") {
    UpdateTask task = fixtures::tiny_switch_task(10000);
    TaskContext ctx(task);
    State init = initial_state(ctx);
    auto succ = successors(init, ctx);
    int switches = 0;
    for (const Successor &s : succ)
        if (is_switch(s.action.kind)) {
            ++switches;
            CHECK(s.action.kind == ActionKind::SwitchNeeded);
            CHECK(is_goal(s.state)); // u[x] == v[y]: one action clears both
        }
    CHECK(switches == 1);

    // cash equal to the inflow: only BUY-NEEDED applies
    UpdateTask cash_task;
    cash_task.cost_model = CostModel({fixtures::fund("A", "A", 1)});
    cash_task.inflows = {{"A", 500}};
    cash_task.initial_cash = 500;
    TaskContext cctx(cash_task);
    for (const Successor &s : successors(initial_state(cctx), cctx))
        CHECK(s.action.kind == ActionKind::BuyNeeded);
}

TEST_CASE("every applicable action strictly shrinks the pending total") {
    probgen::GeneratorConfig cfg;
    probgen::Rng rng(4242);
    for (int size : {4, 5, 6}) {
        cfg.n_holdings = size;
        cfg.seed = probgen::derive_seed(7, static_cast<std::uint64_t>(size), 0);
        UpdateTask task = probgen::generate_task(cfg);
        TaskContext ctx(task);
        for (const State &s : random_walk_states(ctx, rng, 10)) {
            Money before = s.pending_out_total() + s.pending_in_total();
            for (const Successor &succ : successors(s, ctx)) {
                Money after = succ.state.pending_out_total() + succ.state.pending_in_total();
                CHECK(after < before);
            }
        }
    }
}

TEST_CASE("solvable states always have a move") {
    probgen::GeneratorConfig cfg;
    probgen::Rng rng(555);
    cfg.n_holdings = 5;
    cfg.seed = 11;
    UpdateTask task = probgen::generate_task(cfg);
    TaskContext ctx(task);
    for (const State &s : random_walk_states(ctx, rng, 25)) {
        if (is_goal(s))
            continue;
        bool balance_ok = s.pending_out_total() + s.w >= s.pending_in_total();
        REQUIRE(balance_ok); // reachable states keep the funding invariant
        CHECK(!successors(s, ctx).empty());
    }
}

TEST_CASE("switch-then-buy reaches the same flows as sell-then-buy") {
    // u={A:a, C:b-a}, v={B:b}: SWITCH-AVAILABLE(A,B) leaves the same
    // (u, v, w) as SELL(A) followed by BUY-AVAILABLE(B)
    UpdateTask task;
    task.cost_model = CostModel({fixtures::fund("A", "A", 3), fixtures::fund("B", "B", 5),
                                 fixtures::etf("C", "C", 50, 2)});
    task.outflows = {{"A", 4000}, {"C", 5000}};
    task.inflows = {{"B", 9000}};
    TaskContext ctx(task);
    State init = initial_state(ctx);

    std::optional<State> via_switch;
    for (const Successor &s : successors(init, ctx))
        if (s.action.kind == ActionKind::SwitchAvailable)
            via_switch = s.state;
    REQUIRE(via_switch.has_value());

    std::optional<State> via_sell;
    for (const Successor &s : successors(init, ctx))
        if (s.action.kind == ActionKind::Sell &&
            ctx.cost_model().holding(static_cast<std::size_t>(s.action.from)).id == "A")
            via_sell = s.state;
    REQUIRE(via_sell.has_value());
    std::optional<State> via_sell_buy;
    for (const Successor &s : successors(*via_sell, ctx))
        if (s.action.kind == ActionKind::BuyAvailable)
            via_sell_buy = s.state;
    REQUIRE(via_sell_buy.has_value());

    CHECK(via_switch->u == via_sell_buy->u);
    CHECK(via_switch->v == via_sell_buy->v);
    CHECK(via_switch->w == via_sell_buy->w);
}

TEST_CASE("canonical states compare and hash equal") {
    UpdateTask task = fixtures::reference_portfolio();
    TaskContext ctx(task);
    State a = initial_state(ctx);
    State b = initial_state(ctx);
    CHECK(a == b);
    CHECK(StateHash{}(a) == StateHash{}(b));
    b.w += 1;
    CHECK(!(a == b));
}

TEST_CASE("h_fee on the goal and on a single forced sell") {
    UpdateTask goal_task = fixtures::empty_task();
    TaskContext gctx(goal_task);
    CHECK(h_fee(initial_state(gctx), gctx) == 0);
    CHECK(h_count(initial_state(gctx)) == 0);

    UpdateTask task;
    task.cost_model = CostModel({fixtures::etf("A", "A", 100, 10)});
    task.outflows = {{"A", 10000}};
    TaskContext ctx(task);
    CHECK(h_fee(initial_state(ctx), ctx) == 110); // 100 fixed + 10.00 variable
}

TEST_CASE("h_count counts the larger pending side") {
    UpdateTask task = fixtures::reference_portfolio();
    TaskContext ctx(task);
    CHECK(h_count(initial_state(ctx)) == 4);
}

TEST_CASE("precomputed minimum rates take switch partners into account") {
    UpdateTask task = fixtures::reference_portfolio();
    TaskContext ctx(task);
    const CostModel &cm = task.cost_model;
    // MM trades at 6 bps but can switch at the cheapest partner's rate
    CHECK(ctx.cmin(cm.index_of("MM")) == Bps(1));
    CHECK(ctx.cmin(cm.index_of("EQ")) == Bps(1));
    // ETFs have no switch partners
    CHECK(ctx.cmin(cm.index_of("BT")) == Bps(3));
    CHECK(ctx.exact_pricing() == false); // amounts move on a 5-cent lattice
}
