#pragma once

#include <cctype>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rebal/plan.hpp"

namespace rebal::pddl {

enum class Metric { TotalCost, Makespan };

struct PddlExportConfig {
    double switch_duration = 8; // fund transfers may take days to settle
    double trade_duration = 1;  // market orders are near-immediate
    Metric metric = Metric::TotalCost;

    void check() const {
        if (switch_duration <= 0 || trade_duration <= 0)
            throw std::invalid_argument("durations must be positive");
    }
};

namespace detail5 {

inline std::string num(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

inline std::string bps_literal(const Bps &b) {
    if (b.den == 1)
        return std::to_string(b.num);
    std::ostringstream os;
    os << std::setprecision(12) << static_cast<double>(b.num) / static_cast<double>(b.den);
    return os.str();
}

} // namespace detail5

/// PDDL2.1 domain with durative analogues of the five operators. Pending
/// outflows are positive delta_target values, pending inflows negative ones;
/// money leaves at the start of an action and arrives at its end.
inline std::string export_domain(const PddlExportConfig &config = {}) {
    config.check();
    const std::string td = detail5::num(config.trade_duration);
    std::ostringstream os;
    os << "(define (domain portfolio-update)\n"
       << "  (:requirements :typing :durative-actions :fluents)\n"
       << "  (:types outfund infund - fund)\n"
       << "  (:predicates (transferable ?f - fund))\n"
       << "  (:functions\n"
       << "    (delta_target ?f - fund)\n"
       << "    (in_progress ?from - outfund ?to - infund)\n"
       << "    (pending_sale ?x - outfund)\n"
       << "    (pending_buy ?x - infund)\n"
       << "    (transac_fee ?f - fund)\n"
       << "    (fixed_fee ?f - fund)\n"
       << "    (transfer_time ?from - outfund ?to - infund)\n"
       << "    (cash_balance)\n"
       << "    (total-cost))\n"
       << "\n"
       << "  (:durative-action switch_available\n"
       << "   :parameters (?from - outfund ?to - infund)\n"
       << "   :duration (= ?duration (transfer_time ?from ?to))\n"
       << "   :condition (and\n"
       << "       (at start (transferable ?from))\n"
       << "       (at start (transferable ?to))\n"
       << "       (at start (< (+ (delta_target ?from) (delta_target ?to)) 0))\n"
       << "       (at start (> (delta_target ?from) 0))\n"
       << "       (at start (< (delta_target ?to) 0))\n"
       << "       (at end (> (in_progress ?from ?to) 0)))\n"
       << "   :effect (and\n"
       << "       (at start (assign (delta_target ?from) 0))\n"
       << "       (at start (assign (in_progress ?from ?to) (delta_target ?from)))\n"
       << "       (at end (increase (delta_target ?to) (in_progress ?from ?to)))\n"
       << "       (at end (assign (in_progress ?from ?to) 0))\n"
       << "       (at end (increase (total-cost)\n"
       << "                         (+ (* (transac_fee ?from) (in_progress ?from ?to))\n"
       << "                            (* (transac_fee ?to) (in_progress ?from ?to)))))))\n"
       << "\n"
       << "  (:durative-action switch_needed\n"
       << "   :parameters (?from - outfund ?to - infund)\n"
       << "   :duration (= ?duration (transfer_time ?from ?to))\n"
       << "   :condition (and\n"
       << "       (at start (transferable ?from))\n"
       << "       (at start (transferable ?to))\n"
       << "       (at start (>= (+ (delta_target ?from) (delta_target ?to)) 0))\n"
       << "       (at start (> (delta_target ?from) 0))\n"
       << "       (at start (< (delta_target ?to) 0))\n"
       << "       (at end (> (in_progress ?from ?to) 0)))\n"
       << "   :effect (and\n"
       << "       (at start (increase (delta_target ?from) (delta_target ?to)))\n"
       << "       (at start (assign (in_progress ?from ?to) (* -1 (delta_target ?to))))\n"
       << "       (at end (increase (delta_target ?to) (in_progress ?from ?to)))\n"
       << "       (at end (assign (in_progress ?from ?to) 0))\n"
       << "       (at end (increase (total-cost)\n"
       << "                         (+ (* (transac_fee ?from) (in_progress ?from ?to))\n"
       << "                            (* (transac_fee ?to) (in_progress ?from ?to)))))))\n"
       << "\n"
       << "  (:durative-action sell\n"
       << "   :parameters (?x - outfund)\n"
       << "   :duration (= ?duration " << td << ")\n"
       << "   :condition (and\n"
       << "       (at start (> (delta_target ?x) 0)))\n"
       << "   :effect (and\n"
       << "       (at start (assign (pending_sale ?x) (delta_target ?x)))\n"
       << "       (at start (assign (delta_target ?x) 0))\n"
       << "       (at end (increase (cash_balance) (pending_sale ?x)))\n"
       << "       (at end (increase (total-cost)\n"
       << "                         (+ (fixed_fee ?x) (* (transac_fee ?x) (pending_sale ?x)))))\n"
       << "       (at end (assign (pending_sale ?x) 0))))\n"
       << "\n"
       << "  (:durative-action buy_available\n"
       << "   :parameters (?x - infund)\n"
       << "   :duration (= ?duration " << td << ")\n"
       << "   :condition (and\n"
       << "       (at start (< (delta_target ?x) 0))\n"
       << "       (at start (> (cash_balance) 0))\n"
       << "       (at start (< (+ (cash_balance) (delta_target ?x)) 0)))\n"
       << "   :effect (and\n"
       << "       (at start (assign (pending_buy ?x) (cash_balance)))\n"
       << "       (at start (assign (cash_balance) 0))\n"
       << "       (at end (increase (delta_target ?x) (pending_buy ?x)))\n"
       << "       (at end (increase (total-cost)\n"
       << "                         (+ (fixed_fee ?x) (* (transac_fee ?x) (pending_buy ?x)))))\n"
       << "       (at end (assign (pending_buy ?x) 0))))\n"
       << "\n"
       << "  (:durative-action buy_needed\n"
       << "   :parameters (?x - infund)\n"
       << "   :duration (= ?duration " << td << ")\n"
       << "   :condition (and\n"
       << "       (at start (< (delta_target ?x) 0))\n"
       << "       (at start (>= (+ (cash_balance) (delta_target ?x)) 0)))\n"
       << "   :effect (and\n"
       << "       (at start (assign (pending_buy ?x) (* -1 (delta_target ?x))))\n"
       << "       (at start (increase (cash_balance) (delta_target ?x)))\n"
       << "       (at end (increase (delta_target ?x) (pending_buy ?x)))\n"
       << "       (at end (increase (total-cost)\n"
       << "                         (+ (fixed_fee ?x) (* (transac_fee ?x) (pending_buy ?x)))))\n"
       << "       (at end (assign (pending_buy ?x) 0))))\n"
       << ")\n";
    return os.str();
}

/// Problem document: the signed flows as delta_target initial values, the
/// fee and duration fluents, and the all-deltas-zero goal.
inline std::string export_problem(const UpdateTask &task, const std::string &name,
                                  const PddlExportConfig &config = {}) {
    config.check();
    task.check();
    const CostModel &cm = task.cost_model;
    std::vector<std::string> outs, ins;
    for (auto &[id, amount] : task.outflows)
        outs.push_back(id);
    for (auto &[id, amount] : task.inflows)
        ins.push_back(id);

    std::ostringstream os;
    os << "(define (problem " << name << ")\n"
       << "  (:domain portfolio-update)\n"
       << "  (:objects";
    if (!outs.empty()) {
        for (const std::string &id : outs)
            os << ' ' << id;
        os << " - outfund";
    }
    if (!ins.empty()) {
        os << "\n           ";
        for (const std::string &id : ins)
            os << ' ' << id;
        os << " - infund";
    }
    os << ")\n  (:init\n";
    for (const std::string &id : outs)
        if (cm.transferable(cm.index_of(id)))
            os << "    (transferable " << id << ")\n";
    for (const std::string &id : ins)
        if (cm.transferable(cm.index_of(id)))
            os << "    (transferable " << id << ")\n";
    for (auto &[id, amount] : task.outflows)
        os << "    (= (delta_target " << id << ") " << amount << ")\n";
    for (auto &[id, amount] : task.inflows)
        os << "    (= (delta_target " << id << ") -" << amount << ")\n";
    for (const std::string &id : outs) {
        std::size_t i = cm.index_of(id);
        os << "    (= (transac_fee " << id << ") "
           << detail5::bps_literal(cm.trade_fee(i)) << ")\n"
           << "    (= (fixed_fee " << id << ") " << cm.fixed_fee(i) << ")\n"
           << "    (= (pending_sale " << id << ") 0)\n";
    }
    for (const std::string &id : ins) {
        std::size_t i = cm.index_of(id);
        os << "    (= (transac_fee " << id << ") "
           << detail5::bps_literal(cm.trade_fee(i)) << ")\n"
           << "    (= (fixed_fee " << id << ") " << cm.fixed_fee(i) << ")\n"
           << "    (= (pending_buy " << id << ") 0)\n";
    }
    for (const std::string &o : outs)
        for (const std::string &i : ins) {
            os << "    (= (in_progress " << o << ' ' << i << ") 0)\n";
            os << "    (= (transfer_time " << o << ' ' << i << ") "
               << detail5::num(config.switch_duration) << ")\n";
        }
    os << "    (= (cash_balance) " << task.initial_cash << ")\n"
       << "    (= (total-cost) 0))\n"
       << "  (:goal (and\n";
    for (const std::string &id : outs)
        os << "    (= (delta_target " << id << ") 0)\n";
    for (const std::string &id : ins)
        os << "    (= (delta_target " << id << ") 0)\n";
    os << "  ))\n"
       << "  (:metric minimize "
       << (config.metric == Metric::TotalCost ? "(total-cost)" : "(total-time)")
       << ")\n)\n";
    return os.str();
}

// ---- reading back the emitted subset ----

namespace detail5 {

struct Sexpr {
    std::string atom;
    std::vector<Sexpr> list;
    bool is_atom = false;
};

inline void skip_ws(const std::string &t, std::size_t &i) {
    while (i < t.size()) {
        if (std::isspace(static_cast<unsigned char>(t[i]))) {
            ++i;
        } else if (t[i] == ';') { // comment to end of line
            while (i < t.size() && t[i] != '\n')
                ++i;
        } else {
            break;
        }
    }
}

inline Sexpr parse_sexpr(const std::string &t, std::size_t &i) {
    skip_ws(t, i);
    if (i >= t.size())
        throw std::invalid_argument("unexpected end of PDDL text");
    Sexpr node;
    if (t[i] == '(') {
        ++i;
        while (true) {
            skip_ws(t, i);
            if (i >= t.size())
                throw std::invalid_argument("unbalanced parenthesis in PDDL text");
            if (t[i] == ')') {
                ++i;
                return node;
            }
            node.list.push_back(parse_sexpr(t, i));
        }
    }
    node.is_atom = true;
    std::size_t start = i;
    while (i < t.size() && !std::isspace(static_cast<unsigned char>(t[i])) &&
           t[i] != '(' && t[i] != ')')
        ++i;
    node.atom = t.substr(start, i - start);
    return node;
}

inline Sexpr parse_sexpr(const std::string &t) {
    std::size_t i = 0;
    Sexpr s = parse_sexpr(t, i);
    skip_ws(t, i);
    if (i != t.size())
        throw std::invalid_argument("trailing text after PDDL document");
    return s;
}

} // namespace detail5

/// Recovers the signed flows of an emitted problem document.
inline std::pair<FlowMap, FlowMap> parse_problem_flows(const std::string &text) {
    detail5::Sexpr root = detail5::parse_sexpr(text);
    FlowMap out, in;
    for (const detail5::Sexpr &section : root.list) {
        if (section.is_atom || section.list.empty())
            continue;
        if (!section.list[0].is_atom || section.list[0].atom != ":init")
            continue;
        for (std::size_t k = 1; k < section.list.size(); ++k) {
            const detail5::Sexpr &e = section.list[k];
            if (e.list.size() != 3 || !e.list[0].is_atom || e.list[0].atom != "=")
                continue;
            const detail5::Sexpr &lhs = e.list[1];
            if (lhs.list.size() != 2 || !lhs.list[0].is_atom ||
                lhs.list[0].atom != "delta_target")
                continue;
            const std::string &id = lhs.list[1].atom;
            long long value = std::stoll(e.list[2].atom);
            if (value > 0)
                out[id] = value;
            else if (value < 0)
                in[id] = -value;
        }
    }
    return {out, in};
}

/// Timestamped sequential plan in the usual planner output format.
inline std::string plan_to_pddl(const Plan &plan, const PddlExportConfig &config = {}) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(3);
    double t = 0;
    for (const Action &a : plan.actions) {
        double duration = is_switch(a.kind) ? config.switch_duration : config.trade_duration;
        os << t << ": (";
        switch (a.kind) {
        case ActionKind::Sell: os << "sell " << *a.from; break;
        case ActionKind::BuyAvailable: os << "buy_available " << *a.to; break;
        case ActionKind::BuyNeeded: os << "buy_needed " << *a.to; break;
        case ActionKind::SwitchAvailable: os << "switch_available " << *a.from << ' ' << *a.to; break;
        case ActionKind::SwitchNeeded: os << "switch_needed " << *a.from << ' ' << *a.to; break;
        }
        os << ") [" << duration << "]\n";
        t += duration;
    }
    return os.str();
}

/// Replays a timestamped PDDL plan against a task: amounts and costs are
/// recovered from the operator semantics, so a sequential plan round-trips
/// losslessly between the two representations.
inline Plan pddl_plan_to_plan(const UpdateTask &task, const std::string &text) {
    auto replay = rebal::detail::Replay::initial(task);
    const CostModel &cm = task.cost_model;
    Plan plan;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::size_t semi = line.find(';');
        if (semi != std::string::npos)
            line = line.substr(0, semi);
        std::size_t open = line.find('(');
        std::size_t close = line.rfind(')');
        if (open == std::string::npos || close == std::string::npos || close < open)
            continue;
        std::istringstream body(line.substr(open + 1, close - open - 1));
        std::string name, p1, p2;
        body >> name >> p1 >> p2;
        Action a;
        if (name == "sell") {
            a.kind = ActionKind::Sell;
            a.from = p1;
            a.amount = replay.pending_out(p1);
        } else if (name == "buy_available") {
            a.kind = ActionKind::BuyAvailable;
            a.to = p1;
            a.amount = replay.w;
        } else if (name == "buy_needed") {
            a.kind = ActionKind::BuyNeeded;
            a.to = p1;
            a.amount = replay.pending_in(p1);
        } else if (name == "switch_available") {
            a.kind = ActionKind::SwitchAvailable;
            a.from = p1;
            a.to = p2;
            a.amount = replay.pending_out(p1);
        } else if (name == "switch_needed") {
            a.kind = ActionKind::SwitchNeeded;
            a.from = p1;
            a.to = p2;
            a.amount = replay.pending_in(p2);
        } else {
            throw std::invalid_argument("unknown PDDL action '" + name + "'");
        }
        if (a.amount <= 0)
            throw std::invalid_argument("PDDL step '" + line + "' moves nothing in the reached state");
        a.cost = price_action(a.kind, a.from, a.to, a.amount, cm);
        if (auto err = replay.apply(a, cm))
            throw std::invalid_argument("PDDL step not applicable: " + *err);
        plan.push(std::move(a));
    }
    if (!replay.at_goal())
        throw std::invalid_argument("PDDL plan does not reach the goal");
    return plan;
}

} // namespace rebal::pddl
