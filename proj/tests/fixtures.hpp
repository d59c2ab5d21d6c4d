#pragma once

// Shared task fixtures for the test suites.

#include <map>
#include <string>
#include <vector>

#include "rebal/task.hpp"

namespace fixtures {

using namespace rebal;

inline Holding fund(std::string id, std::string name, std::int64_t ck_bps) {
    Holding h;
    h.id = std::move(id);
    h.name = std::move(name);
    h.transferable = true;
    h.fixed_fee = 0;
    h.variable_fee_bps = Bps(ck_bps);
    return h;
}

inline Holding etf(std::string id, std::string name, Money fixed, std::int64_t ck_bps) {
    Holding h;
    h.id = std::move(id);
    h.name = std::move(name);
    h.transferable = false;
    h.fixed_fee = fixed;
    h.variable_fee_bps = Bps(ck_bps);
    return h;
}

/// The worked example: a 100k account with four transferable funds and three
/// exchange-traded instruments, quarterly-rebalance flows in cents. Fee draw
/// follows the generator conventions (funds have no fixed fee, switches cost
/// the cheaper leg's rate).
inline UpdateTask reference_portfolio() {
    std::vector<Holding> holdings = {
        fund("MM", "Money Market Fund", 6),
        fund("GB", "Europe Gov. Bonds Fund", 1),
        fund("EQ", "Global Equities Fund", 1),
        fund("EM", "Emerging Market Fund", 2),
        etf("RE", "European REITs ETF", 100, 2),
        etf("BT", "Biotech ETF", 100, 3),
        etf("GD", "Gold ETC", 50, 2),
    };
    UpdateTask task;
    task.cost_model = CostModel(std::move(holdings));
    task.outflows = {{"EQ", 10930}, {"BT", 23110}, {"GD", 4110}};
    task.inflows = {{"MM", 12690}, {"GB", 2790}, {"EM", 6085}, {"RE", 16585}};
    task.initial_cash = 0;
    return task;
}

/// Reference plan cost and shape, frozen from an independent exhaustive
/// enumeration of the reference portfolio.
constexpr Money kReferenceOptimalCost = 264;
constexpr int kReferenceOptimalLength = 7;
constexpr Money kReferenceNaiveCost = 271;

/// Two-fund task where a single switch clears everything.
inline UpdateTask tiny_switch_task(Money amount = 10000, std::int64_t ck_a = 2,
                                   std::int64_t ck_b = 4) {
    UpdateTask task;
    task.cost_model = CostModel({fund("A", "Fund A", ck_a), fund("B", "Fund B", ck_b)});
    task.outflows = {{"A", amount}};
    task.inflows = {{"B", amount}};
    return task;
}

inline UpdateTask empty_task() {
    UpdateTask task;
    task.cost_model = CostModel({fund("A", "Fund A", 1), fund("B", "Fund B", 1)});
    return task;
}

} // namespace fixtures
