#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rebal/money.hpp"

namespace rebal {

/// One position in the account. `transferable` marks instruments eligible
/// for in-kind switches (mutual funds under a transfer regime); exchange
/// traded instruments are not. `fixed_fee` is charged once per transaction
/// touching the holding, `variable_fee_bps` per unit of amount moved.
struct Holding {
    std::string id;
    std::string name;
    bool transferable = false;
    Money fixed_fee = 0;
    Bps variable_fee_bps;
    std::optional<std::string> currency; // multi-currency tasks only

    void check() const {
        if (id.empty())
            throw std::invalid_argument("holding with empty id");
        if (fixed_fee < 0)
            throw std::invalid_argument("holding " + id + ": negative fixed fee");
    }
};

/// Per-pair switch rates over the transferable holdings, with per-holding
/// trading rates. Querying a switch rate for a pair with a non-transferable
/// member is a domain error.
class CostModel {
public:
    CostModel() = default;

    /// `switch_overrides` supplies explicit C_S entries; pairs without an
    /// entry default to min(C_K(x), C_K(y)) — a switch is a single transfer,
    /// priced at the cheaper leg's rate.
    explicit CostModel(std::vector<Holding> holdings,
                       std::map<std::pair<std::string, std::string>, Bps> switch_overrides = {})
        : holdings_(std::move(holdings)) {
        for (std::size_t i = 0; i < holdings_.size(); ++i) {
            holdings_[i].check();
            if (!index_.emplace(holdings_[i].id, i).second)
                throw std::invalid_argument("duplicate holding id: " + holdings_[i].id);
        }
        for (auto &[pair, bps] : switch_overrides) {
            std::size_t a = index_of(pair.first);
            std::size_t b = index_of(pair.second);
            if (!holdings_[a].transferable || !holdings_[b].transferable)
                throw std::domain_error("switch fee override on non-transferable pair " +
                                        pair.first + "->" + pair.second);
            overrides_[{a, b}] = bps;
        }
    }

    const std::vector<Holding> &holdings() const { return holdings_; }
    std::size_t size() const { return holdings_.size(); }
    const Holding &holding(std::size_t i) const { return holdings_.at(i); }

    bool has(const std::string &id) const { return index_.count(id) != 0; }
    std::size_t index_of(const std::string &id) const {
        auto it = index_.find(id);
        if (it == index_.end())
            throw std::invalid_argument("unknown holding id: " + id);
        return it->second;
    }

    bool transferable(std::size_t i) const { return holding(i).transferable; }
    Money fixed_fee(std::size_t i) const { return holding(i).fixed_fee; }
    const Bps &trade_fee(std::size_t i) const { return holding(i).variable_fee_bps; }

    Bps switch_fee(std::size_t from, std::size_t to) const {
        if (!transferable(from) || !transferable(to))
            throw std::domain_error("switch fee queried for non-transferable pair " +
                                    holding(from).id + "->" + holding(to).id);
        auto it = overrides_.find({from, to});
        if (it != overrides_.end())
            return it->second;
        return min(trade_fee(from), trade_fee(to));
    }

    const std::map<std::pair<std::size_t, std::size_t>, Bps> &switch_overrides() const {
        return overrides_;
    }

private:
    std::vector<Holding> holdings_;
    std::map<std::string, std::size_t> index_;
    std::map<std::pair<std::size_t, std::size_t>, Bps> overrides_;
};

using FlowMap = std::map<std::string, Money>;

/// A portfolio-update problem instance: the money that must leave each
/// overweight holding, the money that must enter each underweight one, and
/// any cash already available to fund purchases.
struct UpdateTask {
    CostModel cost_model;
    FlowMap outflows;
    FlowMap inflows;
    Money initial_cash = 0;

    void check() const {
        Money out_total = 0, in_total = 0;
        for (auto &[id, amount] : outflows) {
            cost_model.index_of(id);
            if (amount <= 0)
                throw std::invalid_argument("non-positive outflow for " + id);
            if (inflows.count(id))
                throw std::invalid_argument("holding " + id + " has both an outflow and an inflow");
            out_total += amount;
        }
        for (auto &[id, amount] : inflows) {
            cost_model.index_of(id);
            if (amount <= 0)
                throw std::invalid_argument("non-positive inflow for " + id);
            in_total += amount;
        }
        if (initial_cash < 0)
            throw std::invalid_argument("negative initial cash");
        if (out_total + initial_cash < in_total)
            throw std::invalid_argument("infeasible task: outflows + cash < inflows");
    }

    bool empty_flows() const { return outflows.empty() && inflows.empty(); }

    Money total_outflow() const {
        Money t = 0;
        for (auto &[id, a] : outflows)
            t += a;
        return t;
    }
    Money total_inflow() const {
        Money t = 0;
        for (auto &[id, a] : inflows)
            t += a;
        return t;
    }
};

/// Money flows from the difference between target and current values:
/// positive current-target gaps become outflows, negative ones inflows,
/// zero differences are omitted.
inline std::pair<FlowMap, FlowMap> derive_flows(const FlowMap &current,
                                                const FlowMap &target) {
    if (current.size() != target.size())
        throw std::invalid_argument("current and target cover different holdings");
    FlowMap out, in;
    for (auto &[id, cur] : current) {
        auto it = target.find(id);
        if (it == target.end())
            throw std::invalid_argument("holding " + id + " missing from target");
        if (cur < 0 || it->second < 0)
            throw std::invalid_argument("negative portfolio value for " + id);
        Money diff = cur - it->second;
        if (diff > 0)
            out[id] = diff;
        else if (diff < 0)
            in[id] = -diff;
    }
    return {std::move(out), std::move(in)};
}

} // namespace rebal
