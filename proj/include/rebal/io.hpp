#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rebal/forex.hpp"
#include "rebal/probgen.hpp"
#include "rebal/task.hpp"

namespace rebal::io {

using Json = nlohmann::ordered_json;

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A parsed problem file: the task plus, for multi-currency problems, the
/// exchange table.
struct Problem {
    UpdateTask task;
    std::optional<forex::FxTable> fx;

    bool multi_currency() const { return fx.has_value(); }

    forex::CurrencyTask currency_task() const {
        if (!fx)
            throw FormatError("problem has no fx section");
        return forex::CurrencyTask{task, *fx};
    }
};

namespace detail4 {

inline Bps bps_from_json(const Json &j, const std::string &field) {
    if (j.is_number_unsigned() || j.is_number_integer())
        return Bps(j.get<std::int64_t>());
    if (j.is_string())
        return Bps::parse(j.get<std::string>());
    throw FormatError("field '" + field + "' must be an integer or a \"p/q\" string");
}

inline Json bps_to_json(const Bps &b) {
    if (b.den == 1)
        return Json(b.num);
    return Json(b.to_string());
}

inline Money money_from_json(const Json &j, const std::string &field) {
    if (!j.is_number_integer() && !j.is_number_unsigned())
        throw FormatError("field '" + field + "' must be an integer amount of minor units");
    return j.get<Money>();
}

inline FlowMap flows_from_json(const Json &j, const std::string &field) {
    if (!j.is_object())
        throw FormatError("field '" + field + "' must map holding ids to amounts");
    FlowMap out;
    for (auto it = j.begin(); it != j.end(); ++it)
        out[it.key()] = money_from_json(it.value(), field + "." + it.key());
    return out;
}

} // namespace detail4

inline Problem parse_problem(const Json &root) {
    if (!root.is_object())
        throw FormatError("problem document must be a JSON object");
    if (!root.contains("holdings"))
        throw FormatError("missing field 'holdings'");

    std::vector<Holding> holdings;
    bool any_currency = false;
    for (const Json &h : root["holdings"]) {
        Holding holding;
        if (!h.contains("id"))
            throw FormatError("holding without field 'id'");
        holding.id = h["id"].get<std::string>();
        holding.name = h.value("name", holding.id);
        if (!h.contains("transferable"))
            throw FormatError("holding '" + holding.id + "' missing field 'transferable'");
        holding.transferable = h["transferable"].get<bool>();
        holding.fixed_fee =
            h.contains("fixed_fee")
                ? detail4::money_from_json(h["fixed_fee"], holding.id + ".fixed_fee")
                : 0;
        holding.variable_fee_bps =
            h.contains("variable_fee_bps")
                ? detail4::bps_from_json(h["variable_fee_bps"], holding.id + ".variable_fee_bps")
                : Bps(0);
        if (h.contains("currency")) {
            holding.currency = h["currency"].get<std::string>();
            any_currency = true;
        }
        holdings.push_back(std::move(holding));
    }

    std::map<std::pair<std::string, std::string>, Bps> overrides;
    if (root.contains("switch_fees_bps")) {
        for (const Json &o : root["switch_fees_bps"]) {
            if (!o.contains("from") || !o.contains("to") || !o.contains("bps"))
                throw FormatError("switch_fees_bps entries need 'from', 'to' and 'bps'");
            overrides[{o["from"].get<std::string>(), o["to"].get<std::string>()}] =
                detail4::bps_from_json(o["bps"], "switch_fees_bps.bps");
        }
    }

    Problem problem;
    problem.task.cost_model = CostModel(std::move(holdings), std::move(overrides));

    bool has_flows = root.contains("outflows") || root.contains("inflows");
    bool has_values = root.contains("current") || root.contains("target");
    if (has_flows && has_values)
        throw FormatError("give either 'outflows'/'inflows' or 'current'/'target', not both");
    if (has_flows) {
        if (root.contains("outflows"))
            problem.task.outflows = detail4::flows_from_json(root["outflows"], "outflows");
        if (root.contains("inflows"))
            problem.task.inflows = detail4::flows_from_json(root["inflows"], "inflows");
    } else if (has_values) {
        if (!root.contains("current") || !root.contains("target"))
            throw FormatError("'current' and 'target' must be given together");
        auto [out, in] = derive_flows(detail4::flows_from_json(root["current"], "current"),
                                      detail4::flows_from_json(root["target"], "target"));
        problem.task.outflows = std::move(out);
        problem.task.inflows = std::move(in);
    } else {
        throw FormatError("missing flows: give 'outflows'/'inflows' or 'current'/'target'");
    }
    problem.task.initial_cash =
        root.contains("initial_cash")
            ? detail4::money_from_json(root["initial_cash"], "initial_cash")
            : 0;

    if (root.contains("fx")) {
        const Json &fx = root["fx"];
        forex::FxTable table;
        if (fx.contains("fee_bps"))
            table.fee_bps = detail4::bps_from_json(fx["fee_bps"], "fx.fee_bps");
        if (!fx.contains("rates"))
            throw FormatError("fx section missing field 'rates'");
        for (const Json &r : fx["rates"]) {
            if (!r.contains("from") || !r.contains("to") || !r.contains("num") ||
                !r.contains("den"))
                throw FormatError("fx.rates entries need 'from', 'to', 'num' and 'den'");
            table.add_rate(r["from"].get<std::string>(), r["to"].get<std::string>(),
                           forex::Rate(r["num"].get<std::int64_t>(),
                                       r["den"].get<std::int64_t>()));
        }
        problem.fx = std::move(table);
    }
    if (any_currency && !problem.fx)
        throw FormatError("holdings carry currency tags but there is no 'fx' section");
    if (!any_currency && problem.fx)
        throw FormatError("'fx' section given but no holding has a currency tag");

    try {
        problem.task.check();
        if (problem.fx)
            problem.currency_task().check();
    } catch (const std::invalid_argument &e) {
        throw FormatError(e.what());
    }
    return problem;
}

inline Problem parse_problem_text(const std::string &text) {
    Json j = Json::parse(text, nullptr, true, true); // with comments allowed
    return parse_problem(j);
}

inline Json problem_to_json(const UpdateTask &task,
                            const std::optional<forex::FxTable> &fx = std::nullopt) {
    Json root;
    root["format"] = "rebal-problem/1";
    Json holdings = Json::array();
    for (const Holding &h : task.cost_model.holdings()) {
        Json j;
        j["id"] = h.id;
        j["name"] = h.name;
        j["transferable"] = h.transferable;
        j["fixed_fee"] = h.fixed_fee;
        j["variable_fee_bps"] = detail4::bps_to_json(h.variable_fee_bps);
        if (h.currency)
            j["currency"] = *h.currency;
        holdings.push_back(std::move(j));
    }
    root["holdings"] = std::move(holdings);
    Json out = Json::object(), in = Json::object();
    for (auto &[id, amount] : task.outflows)
        out[id] = amount;
    for (auto &[id, amount] : task.inflows)
        in[id] = amount;
    root["outflows"] = std::move(out);
    root["inflows"] = std::move(in);
    root["initial_cash"] = task.initial_cash;
    if (!task.cost_model.switch_overrides().empty()) {
        Json ov = Json::array();
        for (auto &[pair, bps] : task.cost_model.switch_overrides()) {
            Json o;
            o["from"] = task.cost_model.holding(pair.first).id;
            o["to"] = task.cost_model.holding(pair.second).id;
            o["bps"] = detail4::bps_to_json(bps);
            ov.push_back(std::move(o));
        }
        root["switch_fees_bps"] = std::move(ov);
    }
    if (fx) {
        Json j;
        j["fee_bps"] = detail4::bps_to_json(fx->fee_bps);
        Json rates = Json::array();
        for (auto &[pair, rate] : fx->rates) {
            Json r;
            r["from"] = pair.first;
            r["to"] = pair.second;
            r["num"] = rate.num;
            r["den"] = rate.den;
            rates.push_back(std::move(r));
        }
        j["rates"] = std::move(rates);
        root["fx"] = std::move(j);
    }
    return root;
}

// ---- plan files ----

inline std::string kind_name(ActionKind k) {
    switch (k) {
    case ActionKind::Sell: return "SELL";
    case ActionKind::BuyAvailable: return "BUY_AVAILABLE";
    case ActionKind::BuyNeeded: return "BUY_NEEDED";
    case ActionKind::SwitchAvailable: return "SWITCH_AVAILABLE";
    case ActionKind::SwitchNeeded: return "SWITCH_NEEDED";
    }
    return "?";
}

inline ActionKind kind_from_name(const std::string &name) {
    if (name == "SELL")
        return ActionKind::Sell;
    if (name == "BUY_AVAILABLE")
        return ActionKind::BuyAvailable;
    if (name == "BUY_NEEDED")
        return ActionKind::BuyNeeded;
    if (name == "SWITCH_AVAILABLE")
        return ActionKind::SwitchAvailable;
    if (name == "SWITCH_NEEDED")
        return ActionKind::SwitchNeeded;
    throw FormatError("unknown action kind '" + name + "'");
}

inline Json plan_to_json(const forex::FxPlan &plan) {
    Json root;
    root["format"] = "rebal-plan/1";
    Json actions = Json::array();
    for (const forex::FxStep &step : plan.steps) {
        Json j;
        if (std::holds_alternative<Action>(step)) {
            const Action &a = std::get<Action>(step);
            j["kind"] = kind_name(a.kind);
            if (a.from)
                j["from"] = *a.from;
            if (a.to)
                j["to"] = *a.to;
            j["amount"] = a.amount;
            j["cost"] = a.cost;
        } else {
            const forex::ExchangeAction &e = std::get<forex::ExchangeAction>(step);
            j["kind"] = e.kind == forex::ExchangeKind::Available ? "EXCHANGE_AVAILABLE"
                                                                 : "EXCHANGE_NEEDED";
            j["from_currency"] = e.from_currency;
            j["to_currency"] = e.to_currency;
            j["amount"] = e.source_amount;
            j["received"] = e.received;
            j["cost"] = e.cost;
            if (e.target)
                j["target"] = *e.target;
        }
        actions.push_back(std::move(j));
    }
    root["actions"] = std::move(actions);
    root["total_cost"] = plan.total_cost;
    root["length"] = plan.length();
    return root;
}

inline Json plan_to_json(const Plan &plan) {
    forex::FxPlan fx;
    for (const Action &a : plan.actions)
        fx.push(a);
    return plan_to_json(fx);
}

inline forex::FxPlan parse_plan(const Json &root) {
    if (!root.contains("actions"))
        throw FormatError("plan document missing field 'actions'");
    forex::FxPlan plan;
    for (const Json &j : root["actions"]) {
        if (!j.contains("kind"))
            throw FormatError("plan action missing field 'kind'");
        std::string kind = j["kind"].get<std::string>();
        if (kind == "EXCHANGE_AVAILABLE" || kind == "EXCHANGE_NEEDED") {
            forex::ExchangeAction e;
            e.kind = kind == "EXCHANGE_AVAILABLE" ? forex::ExchangeKind::Available
                                                  : forex::ExchangeKind::Needed;
            e.from_currency = j.at("from_currency").get<std::string>();
            e.to_currency = j.at("to_currency").get<std::string>();
            e.source_amount = detail4::money_from_json(j.at("amount"), "amount");
            e.received = detail4::money_from_json(j.at("received"), "received");
            e.cost = detail4::money_from_json(j.at("cost"), "cost");
            if (j.contains("target"))
                e.target = j["target"].get<std::string>();
            plan.push(std::move(e));
        } else {
            Action a;
            a.kind = kind_from_name(kind);
            if (j.contains("from"))
                a.from = j["from"].get<std::string>();
            if (j.contains("to"))
                a.to = j["to"].get<std::string>();
            a.amount = detail4::money_from_json(j.at("amount"), "amount");
            a.cost = detail4::money_from_json(j.at("cost"), "cost");
            plan.push(std::move(a));
        }
    }
    return plan;
}

/// An fx plan without exchange steps is an ordinary plan.
inline std::optional<Plan> to_core_plan(const forex::FxPlan &fx) {
    Plan plan;
    for (const forex::FxStep &step : fx.steps) {
        if (!std::holds_alternative<Action>(step))
            return std::nullopt;
        plan.push(std::get<Action>(step));
    }
    return plan;
}

// ---- suite manifests ----

struct Manifest {
    probgen::GeneratorConfig base;
    std::vector<int> sizes;
    int per_size = 0;
    std::uint64_t seed = 0;
    struct Entry {
        std::string id;
        std::string file;
        int size = 0;
        std::uint64_t seed = 0;
    };
    std::vector<Entry> tasks;
};

inline Json manifest_to_json(const Manifest &m) {
    Json root;
    root["format"] = "rebal-suite/1";
    Json cfg;
    cfg["sizes"] = m.sizes;
    cfg["per_size"] = m.per_size;
    cfg["seed"] = m.seed;
    cfg["portfolio_value"] = m.base.portfolio_value;
    cfg["flow_granularity"] = m.base.flow_granularity;
    cfg["transferable_ratio"] = std::to_string(m.base.transferable_num) + "/" +
                                std::to_string(m.base.transferable_den);
    cfg["variable_fee_bps_range"] = Json::array({m.base.variable_fee_bps_lo,
                                                 m.base.variable_fee_bps_hi});
    cfg["etf_fixed_fee_choices"] = m.base.etf_fixed_fee_choices;
    root["config"] = std::move(cfg);
    Json tasks = Json::array();
    for (const Manifest::Entry &e : m.tasks) {
        Json t;
        t["id"] = e.id;
        t["file"] = e.file;
        t["size"] = e.size;
        t["seed"] = e.seed;
        tasks.push_back(std::move(t));
    }
    root["tasks"] = std::move(tasks);
    return root;
}

inline Manifest parse_manifest(const Json &root) {
    Manifest m;
    if (!root.contains("tasks"))
        throw FormatError("suite manifest missing field 'tasks'");
    if (root.contains("config")) {
        const Json &cfg = root["config"];
        if (cfg.contains("sizes"))
            m.sizes = cfg["sizes"].get<std::vector<int>>();
        m.per_size = cfg.value("per_size", 0);
        m.seed = cfg.value("seed", std::uint64_t{0});
        if (cfg.contains("portfolio_value"))
            m.base.portfolio_value = cfg["portfolio_value"].get<Money>();
        if (cfg.contains("flow_granularity"))
            m.base.flow_granularity = cfg["flow_granularity"].get<Money>();
    }
    for (const Json &t : root["tasks"]) {
        Manifest::Entry e;
        e.id = t.at("id").get<std::string>();
        e.file = t.at("file").get<std::string>();
        e.size = t.value("size", 0);
        e.seed = t.value("seed", std::uint64_t{0});
        m.tasks.push_back(std::move(e));
    }
    return m;
}

// ---- files ----

inline std::string read_text_file(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw FormatError("cannot open file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_text_file(const std::string &path, const std::string &text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw FormatError("cannot write file: " + path);
    out << text;
}

inline Problem read_problem_file(const std::string &path) {
    try {
        return parse_problem_text(read_text_file(path));
    } catch (const Json::exception &e) {
        throw FormatError(path + ": " + e.what());
    } catch (const FormatError &e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline std::string dump(const Json &j) { return j.dump(2) + "\n"; }

} // namespace rebal::io
