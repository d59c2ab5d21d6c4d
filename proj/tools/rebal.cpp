// Command-line front end: solve single update tasks, generate benchmark
// suites, run algorithm comparisons, and export PDDL models.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rebal/bench.hpp"
#include "rebal/io.hpp"
#include "rebal/pddl.hpp"
#include "rebal/probgen.hpp"
#include "rebal/search.hpp"
#include "rebal/transport.hpp"

namespace fs = std::filesystem;
using namespace rebal;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;    // bad flags or unreadable/invalid input
constexpr int kExitNoPlan = 2;   // node budget exhausted without a plan

std::vector<int> parse_sizes(const std::string &text) {
    std::vector<int> sizes;
    std::size_t dots = text.find("..");
    if (dots != std::string::npos) {
        int lo = std::stoi(text.substr(0, dots));
        int hi = std::stoi(text.substr(dots + 2));
        for (int s = lo; s <= hi; ++s)
            sizes.push_back(s);
        return sizes;
    }
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t comma = text.find(',', start);
        std::string part = text.substr(start, comma == std::string::npos
                                                  ? std::string::npos
                                                  : comma - start);
        if (!part.empty())
            sizes.push_back(std::stoi(part));
        if (comma == std::string::npos)
            break;
        start = comma + 1;
    }
    return sizes;
}

void print_steps(const forex::FxPlan &plan) {
    std::cout << "STEP  ACTION\n";
    int step = 1;
    for (const forex::FxStep &s : plan.steps) {
        std::string text = std::visit([](const auto &a) { return a.describe(); }, s);
        Money cost = std::visit([](const auto &a) { return a.cost; }, s);
        std::cout << step++ << "     " << text << "   (cost " << format_money(cost)
                  << ")\n";
    }
    std::cout << "total cost " << format_money(plan.total_cost) << " over "
              << plan.length() << " transactions\n";
}

forex::FxPlan as_fx(const Plan &plan) {
    forex::FxPlan fx;
    for (const Action &a : plan.actions)
        fx.push(a);
    return fx;
}

int cmd_plan(const std::string &problem_path, const std::string &algorithm,
             std::int64_t max_nodes, const std::string &out_path) {
    io::Problem problem = io::read_problem_file(problem_path);
    search::SearchLimits limits;
    limits.max_generated_nodes = max_nodes;

    forex::FxPlan plan;
    bool proven_optimal = false;
    if (problem.multi_currency()) {
        forex::CurrencyTask task = problem.currency_task();
        if (algorithm == "naive") {
            plan = forex::fx_naive(task);
        } else if (algorithm == "astar") {
            forex::FxSearchResult r = forex::fx_astar(task, limits);
            if (!r.plan) {
                std::cerr << "node budget exhausted after generating "
                          << r.generated_nodes << " nodes\n";
                return kExitNoPlan;
            }
            plan = std::move(*r.plan);
            proven_optimal = r.optimal;
        } else {
            std::cerr << "algorithm '" << algorithm
                      << "' does not support multi-currency problems "
                         "(use naive or astar)\n";
            return kExitUsage;
        }
        forex::FxValidation v = forex::validate_fx_plan(task, plan);
        if (!v.valid) {
            std::cerr << "internal error: produced plan failed validation: "
                      << v.first_violation.value_or("?") << "\n";
            return kExitUsage;
        }
    } else {
        std::optional<Plan> core;
        if (algorithm == "naive") {
            core = search::naive_plan(problem.task);
        } else if (algorithm == "lp+") {
            core = lp::lp_plus_plan(problem.task);
        } else if (algorithm == "astar" || algorithm == "dfbnb") {
            search::SearchResult r = algorithm == "astar"
                                         ? search::astar_fee(problem.task, limits)
                                         : search::dfbnb(problem.task, limits);
            if (!r.plan) {
                std::cerr << "node budget exhausted after generating "
                          << r.generated_nodes << " nodes\n";
                return kExitNoPlan;
            }
            core = std::move(r.plan);
            proven_optimal = r.optimal;
        } else {
            std::cerr << "unknown algorithm '" << algorithm << "'\n";
            return kExitUsage;
        }
        ValidationReport v = validate_plan(problem.task, *core);
        if (!v.valid) {
            std::cerr << "internal error: produced plan failed validation: "
                      << v.first_violation.value_or("?") << "\n";
            return kExitUsage;
        }
        plan = as_fx(*core);
    }

    print_steps(plan);
    if (proven_optimal)
        std::cout << "(proven optimal)\n";
    if (!out_path.empty())
        io::write_text_file(out_path, io::dump(io::plan_to_json(plan)));
    return kExitOk;
}

int cmd_gen(const std::string &sizes_text, int per_size, std::uint64_t seed,
            const std::string &out_dir, Money value, Money granularity) {
    std::vector<int> sizes = parse_sizes(sizes_text);
    if (sizes.empty()) {
        std::cerr << "no sizes given\n";
        return kExitUsage;
    }
    probgen::GeneratorConfig base;
    base.portfolio_value = value;
    base.flow_granularity = granularity;
    base.check();

    fs::create_directories(out_dir);
    io::Manifest manifest;
    manifest.base = base;
    manifest.sizes = sizes;
    manifest.per_size = per_size;
    manifest.seed = seed;
    for (const probgen::SuiteEntry &entry : probgen::generate_suite(sizes, per_size, seed, base)) {
        std::string file = entry.id + ".json";
        io::write_text_file((fs::path(out_dir) / file).string(),
                            io::dump(io::problem_to_json(entry.task)));
        manifest.tasks.push_back({entry.id, file, entry.config.n_holdings,
                                  entry.config.seed});
    }
    io::write_text_file((fs::path(out_dir) / "manifest.json").string(),
                        io::dump(io::manifest_to_json(manifest)));
    std::cout << "wrote " << manifest.tasks.size() << " problems to " << out_dir << "\n";
    return kExitOk;
}

int cmd_bench(const std::string &suite_path, const std::string &algorithms_text,
              std::int64_t max_nodes, const std::string &out_csv,
              const std::string &summary_path, int jobs) {
    io::Manifest manifest =
        io::parse_manifest(io::Json::parse(io::read_text_file(suite_path)));
    fs::path dir = fs::path(suite_path).parent_path();

    std::vector<std::string> algorithms;
    for (int start = 0, next = 0; next != -1; start = next + 1) {
        std::size_t comma = algorithms_text.find(',', static_cast<std::size_t>(start));
        next = comma == std::string::npos ? -1 : static_cast<int>(comma);
        std::string a = algorithms_text.substr(
            static_cast<std::size_t>(start),
            comma == std::string::npos ? std::string::npos
                                       : comma - static_cast<std::size_t>(start));
        if (!a.empty())
            algorithms.push_back(a);
    }

    std::vector<bench::BenchTask> tasks;
    for (const io::Manifest::Entry &e : manifest.tasks) {
        io::Problem p = io::read_problem_file((dir / e.file).string());
        tasks.push_back({e.id, e.size, std::move(p.task)});
    }

    search::SearchLimits limits;
    limits.max_generated_nodes = max_nodes;
    std::vector<bench::BenchRecord> records =
        bench::run_bench(tasks, algorithms, limits, jobs);
    io::write_text_file(out_csv, bench::to_csv(records));
    std::string summary = bench::summarize(records);
    std::cout << summary;
    if (!summary_path.empty())
        io::write_text_file(summary_path, summary);

    for (const bench::BenchRecord &r : records)
        if (!r.error.empty())
            std::cerr << "warning: " << r.task_id << "/" << r.algorithm << ": "
                      << r.error << "\n";
    return kExitOk;
}

int cmd_export_pddl(const std::string &problem_path, const std::string &out_dir,
                    double switch_duration, double trade_duration,
                    const std::string &metric) {
    io::Problem problem = io::read_problem_file(problem_path);
    if (problem.multi_currency()) {
        std::cerr << "PDDL export covers single-currency problems only\n";
        return kExitUsage;
    }
    pddl::PddlExportConfig config;
    config.switch_duration = switch_duration;
    config.trade_duration = trade_duration;
    if (metric == "makespan")
        config.metric = pddl::Metric::Makespan;
    else if (metric != "total-cost") {
        std::cerr << "unknown metric '" << metric << "'\n";
        return kExitUsage;
    }

    std::string name = fs::path(problem_path).stem().string();
    fs::create_directories(out_dir);
    io::write_text_file((fs::path(out_dir) / (name + "-domain.pddl")).string(),
                        pddl::export_domain(config));
    io::write_text_file((fs::path(out_dir) / (name + "-problem.pddl")).string(),
                        pddl::export_problem(problem.task, name, config));
    std::cout << "wrote " << name << "-domain.pddl and " << name << "-problem.pddl to "
              << out_dir << "\n";
    return kExitOk;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"transaction planner for portfolio updates"};
    app.require_subcommand(1);

    std::string problem_path, out_path, algorithm = "astar";
    std::int64_t max_nodes = 100000;

    CLI::App *plan = app.add_subcommand("plan", "solve one problem file");
    plan->add_option("--problem", problem_path, "problem file")->required();
    plan->add_option("--algorithm", algorithm, "naive, lp+, dfbnb or astar");
    plan->add_option("--max-nodes", max_nodes, "generated-node budget");
    plan->add_option("--out", out_path, "write the plan file here");

    std::string sizes_text = "4..8";
    int per_size = 20;
    std::uint64_t seed = 1;
    Money value = 1000000, granularity = 10000;
    CLI::App *gen = app.add_subcommand("gen", "generate a random problem suite");
    gen->add_option("--sizes", sizes_text, "portfolio sizes, e.g. 4..8 or 4,6,8");
    gen->add_option("--per-size", per_size, "problems per size");
    gen->add_option("--seed", seed, "base seed");
    gen->add_option("--out", out_path, "output directory")->required();
    gen->add_option("--value", value, "portfolio value in minor units");
    gen->add_option("--granularity", granularity, "flow granularity in minor units");

    std::string suite_path, algorithms_text = "naive,lp+,dfbnb,astar", summary_path;
    int jobs = 1;
    CLI::App *benchcmd = app.add_subcommand("bench", "run algorithms over a suite");
    benchcmd->add_option("--suite", suite_path, "suite manifest")->required();
    benchcmd->add_option("--algorithms", algorithms_text, "comma-separated list");
    benchcmd->add_option("--max-nodes", max_nodes, "generated-node budget");
    benchcmd->add_option("--out", out_path, "output CSV")->required();
    benchcmd->add_option("--summary", summary_path, "also write the text summary here");
    benchcmd->add_option("--jobs", jobs, "worker threads");

    double switch_duration = 8, trade_duration = 1;
    std::string metric = "total-cost";
    CLI::App *exp = app.add_subcommand("export-pddl", "write PDDL domain and problem");
    exp->add_option("--problem", problem_path, "problem file")->required();
    exp->add_option("--out", out_path, "output directory")->required();
    exp->add_option("--switch-duration", switch_duration, "switch settlement time");
    exp->add_option("--trade-duration", trade_duration, "market trade time");
    exp->add_option("--metric", metric, "total-cost or makespan");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand("plan"))
            return cmd_plan(problem_path, algorithm, max_nodes, out_path);
        if (app.got_subcommand("gen"))
            return cmd_gen(sizes_text, per_size, seed, out_path, value, granularity);
        if (app.got_subcommand("bench"))
            return cmd_bench(suite_path, algorithms_text, max_nodes, out_path,
                             summary_path, jobs);
        if (app.got_subcommand("export-pddl"))
            return cmd_export_pddl(problem_path, out_path, switch_duration,
                                   trade_duration, metric);
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
