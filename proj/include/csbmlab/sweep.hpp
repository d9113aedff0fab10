#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "csbmlab/generators.hpp"
#include "csbmlab/linear_models.hpp"
#include "csbmlab/rng.hpp"
#include "csbmlab/spectral.hpp"
#include "csbmlab/theory.hpp"
#include "csbmlab/train.hpp"

namespace csbmlab {

struct GridSpec {
    double min;
    double max;
    int steps;

    std::vector<double> values() const {
        if (steps < 1) throw std::invalid_argument("grid needs at least one step");
        std::vector<double> v(static_cast<std::size_t>(steps));
        if (steps == 1) {
            v[0] = min;
            return v;
        }
        const double h = (max - min) / (steps - 1);
        for (int i = 0; i < steps; ++i) v[static_cast<std::size_t>(i)] = min + i * h;
        return v;
    }
};

enum class Aggregation { mean, max, both };

inline const std::vector<std::string>& known_methods() {
    static const std::vector<std::string> methods = {
        "gcn",
        "mlp",
        "spectral",
        "one-layer",
        "two-layer-linear",
        "theory-one-layer",
        "theory-two-layer"};
    return methods;
}

struct SweepConfig {
    GridSpec lambda_grid{-3.0, 3.0, 13};
    GridSpec mu_grid{0.0, 2.0, 9};
    int trials = 10;
    std::vector<std::string> methods = {"one-layer", "two-layer-linear",
                                        "theory-one-layer", "theory-two-layer"};
    CsbmParams base;  // lambda and mu are overwritten per cell
    Aggregation aggregation = Aggregation::both;
    bool smoothing = true;
    double best_margin = 0.02;
    double tail_mass_bound = 1e-8;
    TrainConfig train;
    uint64_t master_seed = 0;
    int workers = 0;  // 0: hardware concurrency
    bool record_timings = false;  // keeps raw.csv byte-stable when off

    void validate() const {
        if (lambda_grid.steps < 1 || mu_grid.steps < 1)
            throw std::invalid_argument("grids must be non-empty");
        if (trials < 1) throw std::invalid_argument("trials must be >= 1");
        if (methods.empty()) throw std::invalid_argument("no methods requested");
        for (const auto& m : methods) {
            bool ok = false;
            for (const auto& km : known_methods()) ok = ok || km == m;
            if (!ok) throw std::invalid_argument("unknown method: " + m);
        }
        const double bound = std::sqrt(base.d);
        if (std::abs(lambda_grid.min) > bound || std::abs(lambda_grid.max) > bound)
            throw std::invalid_argument("lambda grid exceeds sqrt(d)");
        if (mu_grid.min < 0) throw std::invalid_argument("mu grid must be non-negative");
        train.validate();
    }
};

struct PhaseRecord {
    int lambda_idx;
    int mu_idx;
    double lambda;
    double mu;
    int trial;  // 0 for theory methods
    std::string method;
    double accuracy;  // NaN for failed evaluations
    double wall_time_s;
};

struct PhaseMap {
    std::vector<double> lambdas;
    std::vector<double> mus;
    std::vector<std::string> methods;
    int trials;
    std::vector<PhaseRecord> records;
    std::vector<std::string> errors;
};

namespace detail {

inline bool is_theory_method(const std::string& m) {
    return m == "theory-one-layer" || m == "theory-two-layer";
}

/// Fixed stream slot per simulation method, independent of which subset of
/// methods a sweep requests.
inline uint64_t method_stream_slot(const std::string& m) {
    if (m == "gcn") return 2;
    if (m == "mlp") return 3;
    if (m == "spectral") return 4;
    if (m == "one-layer") return 5;
    if (m == "two-layer-linear") return 6;
    throw std::invalid_argument("no stream slot for method: " + m);
}

inline double evaluate_theory_method(const std::string& method, const SweepConfig& cfg,
                                     double lambda, double mu) {
    if (method == "theory-one-layer") {
        const auto [p_in, p_out] = lambda_to_probs(cfg.base.d, lambda, cfg.base.n);
        // The formula takes the feature SNR; general sigma rescales mu.
        const OptimalTheta ot =
            optimal_theta(mu / cfg.base.sigma, cfg.base.n, p_in, p_out);
        return std::max(ot.acc_at_0, ot.acc_at_pi);
    }
    TwoLayerQuery q;
    q.mu = mu;
    q.sigma = cfg.base.sigma;
    q.d = cfg.base.d;
    q.lambda = lambda;
    q.sign_K = +1;
    q.tail_mass_bound = cfg.tail_mass_bound;
    return two_layer_accuracy(q).accuracy;
}

struct TrialData {
    Graph g_train, g_test;
    Labels l_train, l_test;
    Features x_train, x_test;
};

inline TrialData make_trial_data(const CsbmParams& params, const RngStream& trial_rng) {
    RngStream tr = trial_rng.child(0);
    RngStream te = trial_rng.child(1);
    auto [gtr, ltr, xtr] = sample_csbm(params, tr);
    auto [gte, lte, xte] = sample_csbm(params, te);
    return {std::move(gtr), std::move(gte), std::move(ltr),
            std::move(lte), std::move(xtr), std::move(xte)};
}

inline double evaluate_sim_method(const std::string& method, const SweepConfig& cfg,
                                  const TrialData& data, const RngStream& trial_rng) {
    RngStream method_rng = trial_rng.child(method_stream_slot(method));
    if (method == "gcn" || method == "mlp") {
        TrainConfig tc = cfg.train;
        tc.seed = method_rng.seed();
        const TrainResult r =
            method == "gcn"
                ? train_gcn(data.g_train, data.x_train, data.l_train, data.g_test,
                            data.x_test, data.l_test, tc)
                : train_mlp(data.x_train, data.l_train, data.x_test, data.l_test, tc);
        return r.test_accuracy;
    }
    if (method == "spectral") {
        const std::vector<int> pred =
            spectral_cluster(data.g_test, data.l_test.k, method_rng);
        return aligned_accuracy(pred, data.l_test.classes, data.l_test.k, true);
    }
    if (method == "one-layer") {
        const Eigen::VectorXd w =
            fit_one_layer_weights(data.g_train, data.x_train, data.l_train);
        return accuracy_pm(one_layer_predict(data.g_test, data.x_test, w), data.l_test);
    }
    if (method == "two-layer-linear") {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(data.x_test.cols());
        m(0) = 1.0;
        return accuracy_pm(two_layer_linear_predict(data.g_test, data.x_test, m, +1),
                           data.l_test);
    }
    throw std::invalid_argument("unknown simulation method: " + method);
}

}  // namespace detail

/// Run the full grid. Cells x trials form independent tasks over a worker
/// pool; every task derives its own streams from (master_seed, cell, trial),
/// so results are identical for any worker count and records are emitted in
/// canonical order.
inline PhaseMap run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    PhaseMap map;
    map.lambdas = cfg.lambda_grid.values();
    map.mus = cfg.mu_grid.values();
    map.methods = cfg.methods;
    map.trials = cfg.trials;

    std::vector<std::string> sim_methods, theory_methods;
    for (const auto& m : cfg.methods)
        (detail::is_theory_method(m) ? theory_methods : sim_methods).push_back(m);

    struct Task {
        int li, mi;
        int trial;  // -1: the cell's theory task
    };
    std::vector<Task> tasks;
    const auto n_lambda = static_cast<int>(map.lambdas.size());
    const auto n_mu = static_cast<int>(map.mus.size());
    for (int li = 0; li < n_lambda; ++li)
        for (int mi = 0; mi < n_mu; ++mi) {
            if (!theory_methods.empty()) tasks.push_back({li, mi, -1});
            if (!sim_methods.empty())
                for (int t = 0; t < cfg.trials; ++t) tasks.push_back({li, mi, t});
        }

    std::vector<std::vector<PhaseRecord>> slots(tasks.size());
    std::vector<std::string> errors;
    std::mutex error_mutex;
    const RngStream master(cfg.master_seed);

    const auto run_task = [&](std::size_t idx) {
        const Task& task = tasks[idx];
        const double lambda = map.lambdas[static_cast<std::size_t>(task.li)];
        const double mu = map.mus[static_cast<std::size_t>(task.mi)];
        const auto cell_index =
            static_cast<uint64_t>(task.li) * static_cast<uint64_t>(n_mu) +
            static_cast<uint64_t>(task.mi);
        auto& out = slots[idx];

        const auto record = [&](const std::string& method, int trial, double acc,
                                double wall) {
            out.push_back({task.li, task.mi, lambda, mu, trial, method, acc, wall});
        };
        const auto timed = [&](const auto& fn) -> std::pair<double, double> {
            if (!cfg.record_timings) return {fn(), 0.0};
            const auto start = std::chrono::steady_clock::now();
            const double acc = fn();
            const std::chrono::duration<double> dt =
                std::chrono::steady_clock::now() - start;
            return {acc, dt.count()};
        };

        if (task.trial < 0) {
            for (const auto& method : theory_methods) {
                try {
                    const auto [acc, wall] = timed([&] {
                        return detail::evaluate_theory_method(method, cfg, lambda, mu);
                    });
                    record(method, 0, acc, wall);
                } catch (const std::exception& e) {
                    record(method, 0, std::numeric_limits<double>::quiet_NaN(), 0.0);
                    const std::lock_guard<std::mutex> lock(error_mutex);
                    errors.push_back(method + " cell(" + std::to_string(lambda) + "," +
                                     std::to_string(mu) + "): " + e.what());
                }
            }
            return;
        }

        CsbmParams params = cfg.base;
        params.lambda = lambda;
        params.mu = mu;
        const RngStream trial_rng =
            master.child(cell_index).child(static_cast<uint64_t>(task.trial));
        std::optional<detail::TrialData> data;
        try {
            data.emplace(detail::make_trial_data(params, trial_rng));
        } catch (const std::exception& e) {
            for (const auto& method : sim_methods)
                record(method, task.trial, std::numeric_limits<double>::quiet_NaN(), 0.0);
            const std::lock_guard<std::mutex> lock(error_mutex);
            errors.push_back("generation cell(" + std::to_string(lambda) + "," +
                             std::to_string(mu) + ") trial " + std::to_string(task.trial) +
                             ": " + e.what());
            return;
        }
        for (const auto& method : sim_methods) {
            try {
                const auto [acc, wall] = timed([&] {
                    return detail::evaluate_sim_method(method, cfg, *data, trial_rng);
                });
                record(method, task.trial, acc, wall);
            } catch (const std::exception& e) {
                record(method, task.trial, std::numeric_limits<double>::quiet_NaN(), 0.0);
                const std::lock_guard<std::mutex> lock(error_mutex);
                errors.push_back(method + " cell(" + std::to_string(lambda) + "," +
                                 std::to_string(mu) + ") trial " +
                                 std::to_string(task.trial) + ": " + e.what());
            }
        }
    };

    const int workers =
        cfg.workers > 0 ? cfg.workers
                        : std::max(1u, std::thread::hardware_concurrency());
    if (workers == 1) {
        for (std::size_t i = 0; i < tasks.size(); ++i) run_task(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t i = next.fetch_add(1);
                    if (i >= tasks.size()) return;
                    run_task(i);
                }
            });
        for (auto& th : pool) th.join();
    }

    // Canonical record order: cell-major, trial, then the configured method
    // order. Task enumeration already provides (cell, trial) order; methods
    // within a task need interleaving between the theory and sim tasks.
    std::map<std::string, int> method_rank;
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        method_rank[cfg.methods[static_cast<std::size_t>(i)]] = static_cast<int>(i);
    for (auto& slot : slots)
        for (auto& r : slot) map.records.push_back(std::move(r));
    std::sort(map.records.begin(), map.records.end(),
              [&](const PhaseRecord& a, const PhaseRecord& b) {
                  const auto ka = std::tuple(a.lambda_idx, a.mu_idx, a.trial,
                                             method_rank.at(a.method));
                  const auto kb = std::tuple(b.lambda_idx, b.mu_idx, b.trial,
                                             method_rank.at(b.method));
                  return ka < kb;
              });
    std::sort(errors.begin(), errors.end());
    map.errors = std::move(errors);
    return map;
}

struct AggregatedGrids {
    std::vector<double> lambdas;
    std::vector<double> mus;
    std::vector<std::string> methods;
    std::map<std::string, Eigen::MatrixXd> value;  // (lambda_idx, mu_idx)
    std::vector<std::string> all_nan_cells;        // "method@lambda,mu"
};

inline AggregatedGrids aggregate(const PhaseMap& map, Aggregation how) {
    if (how == Aggregation::both)
        throw std::invalid_argument("aggregate runs one statistic at a time");
    AggregatedGrids out;
    out.lambdas = map.lambdas;
    out.mus = map.mus;
    out.methods = map.methods;
    const auto n_lambda = static_cast<Eigen::Index>(map.lambdas.size());
    const auto n_mu = static_cast<Eigen::Index>(map.mus.size());
    for (const auto& method : map.methods)
        out.value[method] = Eigen::MatrixXd::Constant(
            n_lambda, n_mu, std::numeric_limits<double>::quiet_NaN());

    std::map<std::string, Eigen::MatrixXd> sum, mx;
    std::map<std::string, Eigen::MatrixXi> count;
    for (const auto& method : map.methods) {
        sum[method] = Eigen::MatrixXd::Zero(n_lambda, n_mu);
        mx[method] = Eigen::MatrixXd::Constant(
            n_lambda, n_mu, -std::numeric_limits<double>::infinity());
        count[method] = Eigen::MatrixXi::Zero(n_lambda, n_mu);
    }
    for (const auto& r : map.records) {
        if (std::isnan(r.accuracy)) continue;
        sum[r.method](r.lambda_idx, r.mu_idx) += r.accuracy;
        mx[r.method](r.lambda_idx, r.mu_idx) =
            std::max(mx[r.method](r.lambda_idx, r.mu_idx), r.accuracy);
        ++count[r.method](r.lambda_idx, r.mu_idx);
    }
    for (const auto& method : map.methods)
        for (Eigen::Index li = 0; li < n_lambda; ++li)
            for (Eigen::Index mi = 0; mi < n_mu; ++mi) {
                const int c = count[method](li, mi);
                if (c == 0) {
                    out.all_nan_cells.push_back(
                        method + "@" + std::to_string(map.lambdas[static_cast<std::size_t>(li)]) +
                        "," + std::to_string(map.mus[static_cast<std::size_t>(mi)]));
                    continue;
                }
                out.value[method](li, mi) = how == Aggregation::mean
                                                ? sum[method](li, mi) / c
                                                : mx[method](li, mi);
            }
    return out;
}

/// 5x5 uniform box filter, renormalized over the in-bounds (and non-NaN)
/// window so edges are averaged rather than darkened.
inline Eigen::MatrixXd smooth(const Eigen::MatrixXd& grid) {
    Eigen::MatrixXd out(grid.rows(), grid.cols());
    for (Eigen::Index i = 0; i < grid.rows(); ++i)
        for (Eigen::Index j = 0; j < grid.cols(); ++j) {
            double total = 0.0;
            int n = 0;
            for (Eigen::Index a = std::max<Eigen::Index>(0, i - 2);
                 a <= std::min(grid.rows() - 1, i + 2); ++a)
                for (Eigen::Index b = std::max<Eigen::Index>(0, j - 2);
                     b <= std::min(grid.cols() - 1, j + 2); ++b) {
                    if (std::isnan(grid(a, b))) continue;
                    total += grid(a, b);
                    ++n;
                }
            out(i, j) = n > 0 ? total / n : std::numeric_limits<double>::quiet_NaN();
        }
    return out;
}

/// Per-cell winner: the method beating every other by at least margin, else
/// "tie" ("nan" when no method produced a value).
inline std::vector<std::vector<std::string>> best_method_map(
    const std::map<std::string, Eigen::MatrixXd>& grids, double margin) {
    if (grids.empty()) throw std::invalid_argument("no grids");
    const Eigen::Index rows = grids.begin()->second.rows();
    const Eigen::Index cols = grids.begin()->second.cols();
    for (const auto& [name, g] : grids)
        if (g.rows() != rows || g.cols() != cols)
            throw std::invalid_argument("grid shape mismatch for method " + name);
    std::vector<std::vector<std::string>> labels(
        static_cast<std::size_t>(rows),
        std::vector<std::string>(static_cast<std::size_t>(cols)));
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) {
            std::string best_name;
            double best = 0.0, second = 0.0;
            int found = 0;
            for (const auto& [name, g] : grids) {
                const double v = g(i, j);
                if (std::isnan(v)) continue;
                ++found;
                if (found == 1 || v > best) {
                    second = found == 1 ? -std::numeric_limits<double>::infinity() : best;
                    best = v;
                    best_name = name;
                } else {
                    second = std::max(second, v);
                }
            }
            std::string label;
            if (found == 0)
                label = "nan";
            else if (best > second && best - second >= margin)
                label = best_name;
            else
                label = "tie";
            labels[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = label;
        }
    return labels;
}

namespace detail {

inline std::string csv_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

}  // namespace detail

inline void write_raw_csv(const std::filesystem::path& path, const PhaseMap& map) {
    std::ofstream out(path);
    out << "lambda,mu,trial,method,accuracy,wall_time_s\n";
    for (const auto& r : map.records)
        out << detail::csv_num(r.lambda) << "," << detail::csv_num(r.mu) << "," << r.trial
            << "," << r.method << "," << detail::csv_num(r.accuracy) << ","
            << detail::csv_num(r.wall_time_s) << "\n";
}

inline void write_grid_csv(const std::filesystem::path& path, const AggregatedGrids& agg) {
    std::ofstream out(path);
    out << "lambda,mu,method,value\n";
    for (std::size_t li = 0; li < agg.lambdas.size(); ++li)
        for (std::size_t mi = 0; mi < agg.mus.size(); ++mi)
            for (const auto& method : agg.methods)
                out << detail::csv_num(agg.lambdas[li]) << "," << detail::csv_num(agg.mus[mi])
                    << "," << method << ","
                    << detail::csv_num(agg.value.at(method)(static_cast<Eigen::Index>(li),
                                                            static_cast<Eigen::Index>(mi)))
                    << "\n";
}

inline void write_best_csv(const std::filesystem::path& path,
                           const std::vector<double>& lambdas, const std::vector<double>& mus,
                           const std::vector<std::vector<std::string>>& labels) {
    std::ofstream out(path);
    out << "lambda,mu,label\n";
    for (std::size_t li = 0; li < lambdas.size(); ++li)
        for (std::size_t mi = 0; mi < mus.size(); ++mi)
            out << detail::csv_num(lambdas[li]) << "," << detail::csv_num(mus[mi]) << ","
                << labels[li][mi] << "\n";
}

/// Full pipeline: run, aggregate, optionally smooth, write raw/mean/max/best
/// CSVs into out_dir. Returns true when every requested cell produced at
/// least one finite value.
inline bool run_sweep_to_dir(const SweepConfig& cfg, const std::filesystem::path& out_dir) {
    const PhaseMap map = run_sweep(cfg);
    std::filesystem::create_directories(out_dir);
    write_raw_csv(out_dir / "raw.csv", map);

    bool ok = true;
    const auto finish_grid = [&](AggregatedGrids agg) {
        ok = ok && agg.all_nan_cells.empty();
        if (cfg.smoothing)
            for (auto& [name, grid] : agg.value) grid = smooth(grid);
        return agg;
    };

    std::optional<AggregatedGrids> mean_grids, max_grids;
    if (cfg.aggregation != Aggregation::max)
        mean_grids = finish_grid(aggregate(map, Aggregation::mean));
    if (cfg.aggregation != Aggregation::mean)
        max_grids = finish_grid(aggregate(map, Aggregation::max));
    if (mean_grids) write_grid_csv(out_dir / "mean.csv", *mean_grids);
    if (max_grids) write_grid_csv(out_dir / "max.csv", *max_grids);

    const AggregatedGrids& for_best = max_grids ? *max_grids : *mean_grids;
    write_best_csv(out_dir / "best.csv", for_best.lambdas, for_best.mus,
                   best_method_map(for_best.value, cfg.best_margin));

    if (!map.errors.empty()) {
        std::ofstream log(out_dir / "errors.log");
        for (const auto& e : map.errors) log << e << "\n";
    }
    return ok;
}

inline Aggregation parse_aggregation(const std::string& s) {
    if (s == "mean") return Aggregation::mean;
    if (s == "max") return Aggregation::max;
    if (s == "both") return Aggregation::both;
    throw std::invalid_argument("aggregation must be one of: mean, max, both");
}

inline SweepConfig sweep_config_from_json(const nlohmann::json& j) {
    SweepConfig cfg;
    const auto grid = [](const nlohmann::json& g, GridSpec def) {
        return GridSpec{g.value("min", def.min), g.value("max", def.max),
                        g.value("steps", def.steps)};
    };
    if (j.contains("lambda_grid")) cfg.lambda_grid = grid(j["lambda_grid"], cfg.lambda_grid);
    if (j.contains("mu_grid")) cfg.mu_grid = grid(j["mu_grid"], cfg.mu_grid);
    cfg.trials = j.value("trials", cfg.trials);
    if (j.contains("methods")) cfg.methods = j["methods"].get<std::vector<std::string>>();
    cfg.base.n = j.value("n", cfg.base.n);
    cfg.base.k = j.value("k", cfg.base.k);
    cfg.base.d = j.value("d", cfg.base.d);
    cfg.base.m_feat = j.value("m_feat", cfg.base.m_feat);
    cfg.base.sigma = j.value("sigma", cfg.base.sigma);
    if (j.contains("mean_mode")) {
        const std::string mode = j["mean_mode"].get<std::string>();
        if (mode == "orthogonal") cfg.base.mean_mode = MeanMode::orthogonal;
        else if (mode == "diametric") cfg.base.mean_mode = MeanMode::diametric;
        else throw std::invalid_argument("mean_mode must be orthogonal or diametric");
    }
    if (j.contains("aggregation"))
        cfg.aggregation = parse_aggregation(j["aggregation"].get<std::string>());
    cfg.smoothing = j.value("smoothing", cfg.smoothing);
    cfg.best_margin = j.value("best_margin", cfg.best_margin);
    cfg.tail_mass_bound = j.value("tail_mass_bound", cfg.tail_mass_bound);
    if (j.contains("train")) {
        const auto& t = j["train"];
        cfg.train.hidden = t.value("hidden", cfg.train.hidden);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
    }
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.workers = j.value("workers", cfg.workers);
    cfg.record_timings = j.value("record_timings", cfg.record_timings);
    return cfg;
}

}  // namespace csbmlab
