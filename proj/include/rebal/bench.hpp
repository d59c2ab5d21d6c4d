#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "rebal/search.hpp"
#include "rebal/transport.hpp"

namespace rebal::bench {

struct BenchRecord {
    std::string task_id;
    int task_size = 0;
    std::string algorithm;
    bool solved = false;
    bool valid = false;
    Money fee_cost = 0;
    std::int64_t plan_length = 0;
    std::int64_t generated_nodes = 0; // search algorithms only
    std::int64_t expanded_nodes = 0;
    std::optional<search::FirstSolution> first; // DFBnB only
    bool optimal = false;
    double wall_ms = 0;
    std::string error;
};

struct BenchTask {
    std::string id;
    int size = 0;
    UpdateTask task;
};

inline const std::vector<std::string> &known_algorithms() {
    static const std::vector<std::string> algos = {"naive", "lp+", "dfbnb", "astar"};
    return algos;
}

/// Runs one algorithm on one task; failures are captured in the record.
inline BenchRecord run_cell(const BenchTask &bt, const std::string &algorithm,
                            const search::SearchLimits &limits) {
    BenchRecord rec;
    rec.task_id = bt.id;
    rec.task_size = bt.size;
    rec.algorithm = algorithm;
    auto started = std::chrono::steady_clock::now();
    try {
        std::optional<Plan> plan;
        if (algorithm == "naive") {
            plan = search::naive_plan(bt.task);
            rec.optimal = false;
        } else if (algorithm == "lp+") {
            plan = lp::lp_plus_plan(bt.task);
            rec.optimal = false;
        } else if (algorithm == "astar") {
            search::SearchResult r = search::astar_fee(bt.task, limits);
            rec.generated_nodes = r.generated_nodes;
            rec.expanded_nodes = r.expanded_nodes;
            rec.optimal = r.optimal;
            plan = std::move(r.plan);
        } else if (algorithm == "dfbnb") {
            search::SearchResult r = search::dfbnb(bt.task, limits);
            rec.generated_nodes = r.generated_nodes;
            rec.expanded_nodes = r.expanded_nodes;
            rec.first = r.first_solution;
            rec.optimal = r.optimal;
            plan = std::move(r.plan);
        } else {
            throw std::invalid_argument("unknown algorithm: " + algorithm);
        }
        if (plan) {
            rec.solved = true;
            rec.fee_cost = plan->total_cost;
            rec.plan_length = static_cast<std::int64_t>(plan->length());
            rec.valid = validate_plan(bt.task, *plan).valid;
        }
    } catch (const std::exception &e) {
        rec.error = e.what();
    }
    rec.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - started)
                      .count();
    return rec;
}

/// Every (task, algorithm) cell, optionally on worker threads; the result
/// order is by task id then algorithm name regardless of scheduling.
inline std::vector<BenchRecord> run_bench(const std::vector<BenchTask> &tasks,
                                          const std::vector<std::string> &algorithms,
                                          const search::SearchLimits &limits,
                                          int jobs = 1) {
    struct Cell {
        std::size_t task;
        std::size_t algo;
    };
    std::vector<Cell> cells;
    for (std::size_t t = 0; t < tasks.size(); ++t)
        for (std::size_t a = 0; a < algorithms.size(); ++a)
            cells.push_back({t, a});
    std::vector<BenchRecord> records(cells.size());

    if (jobs <= 1) {
        for (std::size_t k = 0; k < cells.size(); ++k)
            records[k] = run_cell(tasks[cells[k].task], algorithms[cells[k].algo], limits);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&]() {
            while (true) {
                std::size_t k = next.fetch_add(1);
                if (k >= cells.size())
                    return;
                records[k] = run_cell(tasks[cells[k].task], algorithms[cells[k].algo], limits);
            }
        };
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j)
            pool.emplace_back(worker);
        for (std::thread &th : pool)
            th.join();
    }
    std::stable_sort(records.begin(), records.end(),
                     [](const BenchRecord &a, const BenchRecord &b) {
                         if (a.task_id != b.task_id)
                             return a.task_id < b.task_id;
                         return a.algorithm < b.algorithm;
                     });
    return records;
}

inline std::string csv_header() {
    return "task,size,algorithm,solved,valid,fee_cost,plan_length,generated_nodes,"
           "expanded_nodes,first_cost,first_length,first_generated,optimal,wall_ms,error";
}

inline std::string to_csv(const std::vector<BenchRecord> &records) {
    std::ostringstream os;
    os << csv_header() << "\n";
    for (const BenchRecord &r : records) {
        os << r.task_id << ',' << r.task_size << ',' << r.algorithm << ','
           << (r.solved ? 1 : 0) << ',' << (r.valid ? 1 : 0) << ',' << r.fee_cost << ','
           << r.plan_length << ',' << r.generated_nodes << ',' << r.expanded_nodes << ',';
        if (r.first)
            os << r.first->cost << ',' << r.first->length << ',' << r.first->generated_nodes;
        else
            os << ",,";
        os << ',' << (r.optimal ? 1 : 0) << ',' << r.wall_ms << ',' << r.error << "\n";
    }
    return os.str();
}

/// Plain-text digest: per-size extra cost over the best algorithm, the
/// extra-steps histogram against the best length, generated-node statistics,
/// and the average cost per transaction.
inline std::string summarize(const std::vector<BenchRecord> &records) {
    std::map<std::string, std::map<std::string, const BenchRecord *>> by_task;
    std::map<std::string, int> size_of;
    std::vector<std::string> algos;
    for (const BenchRecord &r : records) {
        by_task[r.task_id][r.algorithm] = &r;
        size_of[r.task_id] = r.task_size;
        if (std::find(algos.begin(), algos.end(), r.algorithm) == algos.end())
            algos.push_back(r.algorithm);
    }
    std::sort(algos.begin(), algos.end());

    // best cost / best length per task over solved+valid records
    std::map<std::string, Money> best_cost;
    std::map<std::string, std::int64_t> best_len;
    for (auto &[task, row] : by_task) {
        for (auto &[algo, rec] : row) {
            if (!rec->solved || !rec->valid)
                continue;
            if (!best_cost.count(task) || rec->fee_cost < best_cost[task])
                best_cost[task] = rec->fee_cost;
            if (!best_len.count(task) || rec->plan_length < best_len[task])
                best_len[task] = rec->plan_length;
        }
    }

    std::ostringstream os;
    os << "== extra fee cost over the best algorithm, by portfolio size ==\n";
    std::map<std::pair<int, std::string>, std::vector<Money>> extra;
    for (auto &[task, row] : by_task)
        for (auto &[algo, rec] : row)
            if (rec->solved && rec->valid && best_cost.count(task))
                extra[{size_of[task], algo}].push_back(rec->fee_cost - best_cost[task]);
    for (auto &[key, v] : extra) {
        std::sort(v.begin(), v.end());
        Money total = 0, mx = 0;
        std::size_t nonzero = 0;
        for (Money m : v) {
            total += m;
            mx = std::max(mx, m);
            nonzero += m > 0;
        }
        os << "  size " << key.first << "  " << key.second << ": tasks " << v.size()
           << ", with extra cost " << nonzero << ", mean extra "
           << (v.empty() ? 0.0 : static_cast<double>(total) / static_cast<double>(v.size()))
           << ", max extra " << mx << "\n";
    }

    os << "== extra plan steps over the best length (count of tasks) ==\n";
    std::map<std::string, std::map<std::int64_t, int>> dsteps;
    for (auto &[task, row] : by_task)
        for (auto &[algo, rec] : row)
            if (rec->solved && rec->valid && best_len.count(task))
                ++dsteps[algo][rec->plan_length - best_len[task]];
    for (auto &[algo, hist] : dsteps) {
        os << "  " << algo << ":";
        for (auto &[d, count] : hist)
            os << "  +" << d << ": " << count;
        os << "\n";
    }

    os << "== generated nodes (search algorithms), by portfolio size ==\n";
    std::map<std::pair<int, std::string>, std::vector<std::int64_t>> nodes;
    for (const BenchRecord &r : records)
        if (r.algorithm == "astar" || r.algorithm == "dfbnb")
            nodes[{r.task_size, r.algorithm}].push_back(r.generated_nodes);
    for (auto &[key, v] : nodes) {
        std::sort(v.begin(), v.end());
        os << "  size " << key.first << "  " << key.second << ": min " << v.front()
           << ", median " << v[v.size() / 2] << ", max " << v.back() << "\n";
    }

    // scaled to whole currency units (100 minor units each)
    double cost_sum = 0, txn = 0;
    for (const BenchRecord &r : records)
        if (r.algorithm == "astar" && r.solved && r.valid) {
            cost_sum += static_cast<double>(r.fee_cost);
            txn += static_cast<double>(r.plan_length);
        }
    if (txn > 0)
        os << "== average cost per transaction (optimal plans) ==\n  "
           << cost_sum / txn / 100.0 << " units\n";
    return os.str();
}

} // namespace rebal::bench
