#include <catch2/catch_amalgamated.hpp>

#include "fixtures.hpp"
#include "rebal/io.hpp"
#include "rebal/search.hpp"

using namespace rebal;
using namespace rebal::io;

TEST_CASE("problem files round-trip") {
    UpdateTask task = fixtures::reference_portfolio();
    Json j = problem_to_json(task);
    Problem parsed = parse_problem(j);
    CHECK(parsed.task.outflows == task.outflows);
    CHECK(parsed.task.inflows == task.inflows);
    CHECK(parsed.task.initial_cash == task.initial_cash);
    REQUIRE(parsed.task.cost_model.size() == task.cost_model.size());
    for (std::size_t i = 0; i < task.cost_model.size(); ++i) {
        const Holding &a = task.cost_model.holding(i);
        const Holding &b = parsed.task.cost_model.holding(i);
        CHECK(a.id == b.id);
        CHECK(a.name == b.name);
        CHECK(a.transferable == b.transferable);
        CHECK(a.fixed_fee == b.fixed_fee);
        CHECK(a.variable_fee_bps == b.variable_fee_bps);
    }
    CHECK(!parsed.multi_currency());
    // serialisation is deterministic
    CHECK(dump(problem_to_json(parsed.task)) == dump(j));
}

TEST_CASE("switch fee overrides and rational rates survive the round-trip") {
    std::map<std::pair<std::string, std::string>, Bps> overrides{
        {{"A", "B"}, Bps(5, 2)}};
    UpdateTask task;
    task.cost_model = CostModel({fixtures::fund("A", "A", 2), fixtures::fund("B", "B", 4)},
                                overrides);
    task.outflows = {{"A", 1000}};
    task.inflows = {{"B", 1000}};
    Problem parsed = parse_problem(problem_to_json(task));
    std::size_t a = parsed.task.cost_model.index_of("A");
    std::size_t b = parsed.task.cost_model.index_of("B");
    CHECK(parsed.task.cost_model.switch_fee(a, b) == Bps(5, 2));
    // pairs without an override default to the cheaper leg's rate
    CHECK(parsed.task.cost_model.switch_fee(b, a) == Bps(2));
}

TEST_CASE("current and target values derive the flows") {
    Json j;
    j["holdings"] = Json::array({
        Json{{"id", "A"}, {"transferable", true}, {"variable_fee_bps", 1}},
        Json{{"id", "B"}, {"transferable", true}, {"variable_fee_bps", 2}},
    });
    j["current"] = Json{{"A", 6000}, {"B", 4000}};
    j["target"] = Json{{"A", 5000}, {"B", 5000}};
    Problem parsed = parse_problem(j);
    CHECK(parsed.task.outflows == FlowMap{{"A", 1000}});
    CHECK(parsed.task.inflows == FlowMap{{"B", 1000}});
}

TEST_CASE("format errors name the offending field") {
    Json base;
    base["holdings"] = Json::array({
        Json{{"id", "A"}, {"transferable", true}, {"variable_fee_bps", 1}},
    });

    SECTION("missing flows") {
        CHECK_THROWS_WITH(parse_problem(base), Catch::Matchers::ContainsSubstring("flows"));
    }
    SECTION("both flow forms") {
        Json j = base;
        j["outflows"] = Json::object();
        j["current"] = Json::object();
        j["target"] = Json::object();
        CHECK_THROWS_WITH(parse_problem(j), Catch::Matchers::ContainsSubstring("not both"));
    }
    SECTION("bad amount type") {
        Json j = base;
        j["outflows"] = Json{{"A", "lots"}};
        j["inflows"] = Json::object();
        CHECK_THROWS_WITH(parse_problem(j),
                          Catch::Matchers::ContainsSubstring("outflows.A"));
    }
    SECTION("missing transferable flag") {
        Json j;
        j["holdings"] = Json::array({Json{{"id", "X"}}});
        j["outflows"] = Json::object();
        j["inflows"] = Json::object();
        CHECK_THROWS_WITH(parse_problem(j),
                          Catch::Matchers::ContainsSubstring("transferable"));
    }
    SECTION("bad bps string") {
        Json j = base;
        j["holdings"][0]["variable_fee_bps"] = "x/y";
        j["outflows"] = Json::object();
        j["inflows"] = Json::object();
        CHECK_THROWS_AS(parse_problem(j), std::invalid_argument);
    }
    SECTION("currency tags without fx table") {
        Json j = base;
        j["holdings"][0]["currency"] = "EUR";
        j["outflows"] = Json::object();
        j["inflows"] = Json::object();
        CHECK_THROWS_WITH(parse_problem(j), Catch::Matchers::ContainsSubstring("fx"));
    }
}

TEST_CASE("plan files round-trip, including exchange steps") {
    UpdateTask task = fixtures::reference_portfolio();
    search::SearchResult result = search::astar_fee(task);
    REQUIRE(result.plan.has_value());
    forex::FxPlan fx;
    for (const Action &a : result.plan->actions)
        fx.push(a);
    forex::ExchangeAction ex;
    ex.kind = forex::ExchangeKind::Needed;
    ex.from_currency = "USD";
    ex.to_currency = "EUR";
    ex.source_amount = 500;
    ex.received = 449;
    ex.cost = 1;
    ex.target = "MM";
    fx.push(ex);

    forex::FxPlan parsed = parse_plan(plan_to_json(fx));
    REQUIRE(parsed.length() == fx.length());
    CHECK(parsed.total_cost == fx.total_cost);
    CHECK(parsed.steps == fx.steps);

    // a plan without exchanges converts back to a core plan
    forex::FxPlan core_only = parse_plan(plan_to_json(*result.plan));
    auto plan = to_core_plan(core_only);
    REQUIRE(plan.has_value());
    CHECK(*plan == *result.plan);
    CHECK(!to_core_plan(fx).has_value());
}

TEST_CASE("fx problems round-trip") {
    Json j;
    j["holdings"] = Json::array({
        Json{{"id", "A"}, {"transferable", false}, {"variable_fee_bps", 1},
             {"currency", "USD"}},
        Json{{"id", "B"}, {"transferable", false}, {"variable_fee_bps", 2},
             {"currency", "EUR"}},
    });
    j["outflows"] = Json{{"A", 10000}};
    j["inflows"] = Json{{"B", 8000}};
    j["fx"] = Json{{"fee_bps", 5},
                   {"rates", Json::array({Json{{"from", "USD"},
                                               {"to", "EUR"},
                                               {"num", 9},
                                               {"den", 10}}})}};
    Problem parsed = parse_problem(j);
    REQUIRE(parsed.multi_currency());
    forex::CurrencyTask fx_task = parsed.currency_task();
    CHECK(fx_task.fx.rate("EUR", "USD").num == 10); // reciprocal filled in

    Json back = problem_to_json(parsed.task, parsed.fx);
    Problem again = parse_problem(back);
    CHECK(again.multi_currency());
    CHECK(again.task.outflows == parsed.task.outflows);
}

TEST_CASE("manifests round-trip") {
    Manifest m;
    m.sizes = {4, 5, 6};
    m.per_size = 20;
    m.seed = 7;
    m.tasks.push_back({"t04_000", "t04_000.json", 4, 99});
    m.tasks.push_back({"t05_000", "t05_000.json", 5, 100});
    Manifest parsed = parse_manifest(manifest_to_json(m));
    CHECK(parsed.sizes == m.sizes);
    CHECK(parsed.per_size == m.per_size);
    CHECK(parsed.seed == m.seed);
    REQUIRE(parsed.tasks.size() == 2);
    CHECK(parsed.tasks[1].id == "t05_000");
    CHECK(parsed.tasks[1].seed == 100);
}

TEST_CASE("unreadable files raise a format error naming the path") {
    CHECK_THROWS_WITH(read_problem_file("/nonexistent/path.json"),
                      Catch::Matchers::ContainsSubstring("/nonexistent/path.json"));
}
