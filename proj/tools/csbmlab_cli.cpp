#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "csbmlab/csbmlab.hpp"

namespace {

using namespace csbmlab;

MeanMode parse_mean_mode(const std::string& s) {
    if (s == "orthogonal") return MeanMode::orthogonal;
    if (s == "diametric") return MeanMode::diametric;
    throw CLI::ValidationError("--mean-mode", "must be orthogonal or diametric");
}

std::string num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

struct GenerateArgs {
    std::string model;
    std::string out;
    int n = 1000, k = 2, m_feat = 10;
    double d = 10.0, lambda = 0.0, mu = 0.0, sigma = 0.2;
    std::string mean_mode = "diametric";
    uint64_t seed = 0;
    double exponent = 2.5;
    int w_min = 1;
    int subclusters = 5;
    double p_sub = -1.0, mu_sub = -1.0;
    double eps_intra = 0.05, eps_inter = 0.05;
    double closure_fraction = 0.3;
    bool shuffle = false;
};

int run_generate(const GenerateArgs& a) {
    CsbmParams params;
    params.n = a.n;
    params.k = a.k;
    params.d = a.d;
    params.lambda = a.lambda;
    params.mu = a.mu;
    params.m_feat = a.m_feat;
    params.sigma = a.sigma;
    params.mean_mode = parse_mean_mode(a.mean_mode);

    RngStream rng(a.seed);
    Dataset ds;
    ds.meta["model"] = a.model;
    ds.meta["seed"] = a.seed;

    if (a.model == "sbm" || a.model == "csbm" || a.model == "triadic") {
        RngStream edge_rng = rng.child(0);
        auto [g, labels] = sample_sbm(params, edge_rng);
        ds.graph = std::move(g);
        ds.labels = std::move(labels);
        if (a.model != "sbm") {
            RngStream feat_rng = rng.child(1);
            ds.features = sample_features(ds.labels, params, feat_rng);
        }
        if (a.model == "triadic") {
            RngStream closure_rng = rng.child(2);
            ds.graph = apply_triadic_closure(ds.graph, a.closure_fraction, closure_rng);
            ds.meta["closure_fraction"] = a.closure_fraction;
        }
        ds.meta["lambda"] = a.lambda;
        ds.meta["mu"] = a.mu;
        ds.meta["d"] = a.d;
        ds.meta["sigma"] = a.sigma;
    } else if (a.model == "dcsbm") {
        params.degree_correction = DegreeWeightSpec::power_law(a.exponent, a.w_min);
        RngStream edge_rng = rng.child(0);
        auto [g, labels] = sample_dcsbm(params, edge_rng);
        ds.graph = std::move(g);
        ds.labels = std::move(labels);
        RngStream feat_rng = rng.child(1);
        ds.features = sample_features(ds.labels, params, feat_rng);
        ds.meta["lambda"] = a.lambda;
        ds.meta["mu"] = a.mu;
        ds.meta["d"] = a.d;
        ds.meta["sigma"] = a.sigma;
        ds.meta["exponent"] = a.exponent;
    } else if (a.model == "hsbm") {
        HsbmParams h;
        h.subclusters_per_class = a.subclusters;
        h.p_sub = a.p_sub;
        h.mu_sub = a.mu_sub;
        HsbmSample s = sample_hsbm(params, h, rng);
        ds.graph = std::move(s.graph);
        ds.labels = std::move(s.labels);
        ds.features = std::move(s.features);
        ds.meta["lambda"] = a.lambda;
        ds.meta["mu"] = a.mu;
        ds.meta["d"] = a.d;
        ds.meta["sigma"] = a.sigma;
        ds.meta["subclusters_per_class"] = a.subclusters;
    } else if (a.model == "enn") {
        EnnSample s = sample_enn_sbm(a.n, a.eps_intra, a.eps_inter, rng);
        ds.graph = std::move(s.graph);
        ds.labels = std::move(s.labels);
        ds.features = s.positions;  // positions double as 2-d features
        ds.meta["eps_intra"] = a.eps_intra;
        ds.meta["eps_inter"] = a.eps_inter;
    } else {
        throw CLI::ValidationError("--model",
                                   "must be one of: sbm, csbm, dcsbm, hsbm, enn, triadic");
    }

    if (a.shuffle) {
        RngStream shuffle_rng = rng.child(100);
        auto [g, labels, x] = shuffle_nodes(ds.graph, ds.labels, ds.features, shuffle_rng);
        ds.graph = std::move(g);
        ds.labels = std::move(labels);
        ds.features = std::move(x);
        ds.meta["shuffled"] = true;
    }

    save_dataset(a.out, ds);
    const GraphStats stats = graph_stats(ds.graph, ds.labels);
    std::cout << "model,n,edges,avg_degree,homophily\n"
              << a.model << "," << ds.graph.num_nodes() << "," << ds.graph.num_edges()
              << "," << num(stats.avg_degree) << "," << num(stats.edge_homophily) << "\n";
    return 0;
}

struct TheoryArgs {
    std::string formula;
    double mu = 1.0, theta = 0.0, sigma = 1.0;
    int n_in = 0, n_out = 0;
    int n_nodes = 1000;
    double p_in = -1.0, p_out = -1.0;
    double d = 10.0, lambda = 0.0;
    int sign_k = 1;
    double tail_mass = 1e-8;
};

int run_theory(const TheoryArgs& a) {
    if (a.formula == "one-layer-conditional") {
        OneLayerQuery q{a.mu, a.theta, a.n_in, a.n_out};
        std::cout << "formula,mu,theta,n_in,n_out,accuracy\n"
                  << a.formula << "," << num(a.mu) << "," << num(a.theta) << "," << a.n_in
                  << "," << a.n_out << "," << num(conditional_accuracy(q)) << "\n";
        return 0;
    }
    if (a.formula == "one-layer-expected") {
        double p_in = a.p_in, p_out = a.p_out;
        if (p_in < 0 || p_out < 0)
            std::tie(p_in, p_out) = lambda_to_probs(a.d, a.lambda, a.n_nodes);
        const double acc =
            expected_accuracy_one_layer(a.mu, a.theta, a.n_nodes, p_in, p_out);
        std::cout << "formula,mu,theta,N,p_in,p_out,accuracy\n"
                  << a.formula << "," << num(a.mu) << "," << num(a.theta) << ","
                  << a.n_nodes << "," << num(p_in) << "," << num(p_out) << "," << num(acc)
                  << "\n";
        return 0;
    }
    if (a.formula == "two-layer") {
        TwoLayerQuery q;
        q.mu = a.mu;
        q.sigma = a.sigma;
        q.d = a.d;
        q.lambda = a.lambda;
        q.sign_K = a.sign_k;
        q.tail_mass_bound = a.tail_mass;
        const TheoryResult r = two_layer_accuracy(q);
        std::cout << "formula,mu,sigma,d,lambda,sign_K,tail_mass,accuracy,neglected_mass\n"
                  << a.formula << "," << num(a.mu) << "," << num(a.sigma) << "," << num(a.d)
                  << "," << num(a.lambda) << "," << a.sign_k << "," << num(a.tail_mass)
                  << "," << num(r.accuracy) << "," << num(r.neglected_mass) << "\n";
        return 0;
    }
    throw CLI::ValidationError(
        "--formula", "must be one of: one-layer-conditional, one-layer-expected, two-layer");
}

struct EvalArgs {
    std::string method;
    std::string dataset, train_dataset, test_dataset;
    int n = 1000, k = 2, m_feat = 10;
    double d = 10.0, lambda = 0.0, mu = 0.0, sigma = 0.2;
    std::string mean_mode = "diametric";
    uint64_t seed = 0;
    int hidden = 16, epochs = 400;
    double lr = 0.01;
    int sign_k = 1;
};

int run_eval(const EvalArgs& a) {
    RngStream rng(a.seed);
    Dataset train, test;
    if (!a.train_dataset.empty() || !a.test_dataset.empty()) {
        if (a.train_dataset.empty() || a.test_dataset.empty())
            throw CLI::ValidationError("--train-dataset",
                                       "provide both --train-dataset and --test-dataset");
        train = load_dataset(a.train_dataset);
        test = load_dataset(a.test_dataset);
    } else if (!a.dataset.empty()) {
        train = load_dataset(a.dataset);
        test = train;
    } else {
        CsbmParams params;
        params.n = a.n;
        params.k = a.k;
        params.d = a.d;
        params.lambda = a.lambda;
        params.mu = a.mu;
        params.m_feat = a.m_feat;
        params.sigma = a.sigma;
        params.mean_mode = parse_mean_mode(a.mean_mode);
        RngStream tr = rng.child(0);
        RngStream te = rng.child(1);
        auto [g1, l1, x1] = sample_csbm(params, tr);
        train = Dataset{std::move(g1), std::move(l1), std::move(x1), {}};
        auto [g2, l2, x2] = sample_csbm(params, te);
        test = Dataset{std::move(g2), std::move(l2), std::move(x2), {}};
    }

    const auto need_features = [](const Dataset& ds, const char* which) -> const Features& {
        if (!ds.features)
            throw std::runtime_error(std::string(which) + " dataset has no features.csv");
        return *ds.features;
    };

    RngStream method_rng = rng.child(2);
    const auto start = std::chrono::steady_clock::now();
    double accuracy = 0.0;
    if (a.method == "one-layer") {
        const Eigen::VectorXd w =
            fit_one_layer_weights(train.graph, need_features(train, "train"), train.labels);
        accuracy = accuracy_pm(
            one_layer_predict(test.graph, need_features(test, "test"), w), test.labels);
    } else if (a.method == "two-layer-linear") {
        const Features& x = need_features(test, "test");
        Eigen::VectorXd m = Eigen::VectorXd::Zero(x.cols());
        m(0) = 1.0;
        accuracy = accuracy_pm(two_layer_linear_predict(test.graph, x, m, a.sign_k),
                               test.labels);
    } else if (a.method == "gcn" || a.method == "mlp") {
        TrainConfig cfg;
        cfg.hidden = a.hidden;
        cfg.epochs = a.epochs;
        cfg.learning_rate = a.lr;
        cfg.seed = method_rng.seed();
        const TrainResult r =
            a.method == "gcn"
                ? train_gcn(train.graph, need_features(train, "train"), train.labels,
                            test.graph, need_features(test, "test"), test.labels, cfg)
                : train_mlp(need_features(train, "train"), train.labels,
                            need_features(test, "test"), test.labels, cfg);
        accuracy = r.test_accuracy;
    } else if (a.method == "spectral") {
        const std::vector<int> pred =
            spectral_cluster(test.graph, test.labels.k, method_rng);
        accuracy = aligned_accuracy(pred, test.labels.classes, test.labels.k, true);
    } else {
        throw CLI::ValidationError(
            "--method", "must be one of: one-layer, two-layer-linear, gcn, mlp, spectral");
    }
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - start;
    std::cout << "method,seed,accuracy,wall_time_s\n"
              << a.method << "," << a.seed << "," << num(accuracy) << ","
              << num(wall.count()) << "\n";
    return 0;
}

struct RewireArgs {
    std::string in, out, mode = "both";
    double swaps_per_edge = 10.0;
    uint64_t seed = 0;
};

int run_rewire(const RewireArgs& a) {
    RewireConfig cfg;
    cfg.swaps_per_edge = a.swaps_per_edge;
    RngStream rng(a.seed);
    nullify_dataset(a.in, a.out, parse_nullify_mode(a.mode), cfg, rng);
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"attributed random-graph recoverability laboratory"};
    app.require_subcommand(1);

    GenerateArgs gen;
    CLI::App* generate = app.add_subcommand("generate", "sample a graph family to a dataset dir");
    generate->add_option("--model", gen.model, "sbm|csbm|dcsbm|hsbm|enn|triadic")->required();
    generate->add_option("--out", gen.out, "output dataset directory")->required();
    generate->add_option("--n", gen.n);
    generate->add_option("--k", gen.k);
    generate->add_option("--d", gen.d);
    generate->add_option("--lambda", gen.lambda);
    generate->add_option("--mu", gen.mu);
    generate->add_option("--sigma", gen.sigma);
    generate->add_option("--m-feat", gen.m_feat);
    generate->add_option("--mean-mode", gen.mean_mode, "orthogonal|diametric");
    generate->add_option("--seed", gen.seed);
    generate->add_option("--exponent", gen.exponent, "dcsbm power-law exponent");
    generate->add_option("--w-min", gen.w_min, "dcsbm smallest weight");
    generate->add_option("--subclusters", gen.subclusters, "hsbm sub-clusters per class");
    generate->add_option("--p-sub", gen.p_sub, "hsbm sub-cluster probability (default 2 p_in)");
    generate->add_option("--mu-sub", gen.mu_sub, "hsbm offset norm (default mu/4)");
    generate->add_option("--eps-intra", gen.eps_intra, "enn same-class radius");
    generate->add_option("--eps-inter", gen.eps_inter, "enn cross-class radius");
    generate->add_option("--closure-fraction", gen.closure_fraction);
    generate->add_flag("--shuffle", gen.shuffle, "randomly permute node ids");

    TheoryArgs th;
    CLI::App* theory = app.add_subcommand("theory", "evaluate a closed-form accuracy oracle");
    theory->add_option("--formula", th.formula,
                       "one-layer-conditional|one-layer-expected|two-layer")
        ->required();
    theory->add_option("--mu", th.mu);
    theory->add_option("--theta", th.theta);
    theory->add_option("--sigma", th.sigma);
    theory->add_option("--n-in", th.n_in);
    theory->add_option("--n-out", th.n_out);
    theory->add_option("--n", th.n_nodes);
    theory->add_option("--p-in", th.p_in);
    theory->add_option("--p-out", th.p_out);
    theory->add_option("--d", th.d);
    theory->add_option("--lambda", th.lambda);
    theory->add_option("--sign-k", th.sign_k);
    theory->add_option("--tail-mass", th.tail_mass);

    EvalArgs ev;
    CLI::App* eval = app.add_subcommand("eval", "score a classifier on a dataset");
    eval->add_option("--method", ev.method,
                     "one-layer|two-layer-linear|gcn|mlp|spectral")
        ->required();
    eval->add_option("--dataset", ev.dataset);
    eval->add_option("--train-dataset", ev.train_dataset);
    eval->add_option("--test-dataset", ev.test_dataset);
    eval->add_option("--n", ev.n);
    eval->add_option("--k", ev.k);
    eval->add_option("--d", ev.d);
    eval->add_option("--lambda", ev.lambda);
    eval->add_option("--mu", ev.mu);
    eval->add_option("--sigma", ev.sigma);
    eval->add_option("--m-feat", ev.m_feat);
    eval->add_option("--mean-mode", ev.mean_mode);
    eval->add_option("--seed", ev.seed);
    eval->add_option("--hidden", ev.hidden);
    eval->add_option("--epochs", ev.epochs);
    eval->add_option("--lr", ev.lr);
    eval->add_option("--sign-k", ev.sign_k);

    RewireArgs rw;
    CLI::App* rewire = app.add_subcommand("rewire", "erase higher-order structure");
    rewire->add_option("--in", rw.in)->required();
    rewire->add_option("--out", rw.out)->required();
    rewire->add_option("--mode", rw.mode, "edges|features|both");
    rewire->add_option("--swaps-per-edge", rw.swaps_per_edge);
    rewire->add_option("--seed", rw.seed);

    std::string sweep_config_path, sweep_out, sweep_methods, sweep_aggregation;
    SweepConfig sw;
    CLI::App* sweep = app.add_subcommand("sweep", "run a (lambda, mu) phase map");
    sweep->add_option("--config", sweep_config_path, "JSON config file");
    sweep->add_option("--out", sweep_out, "output directory")->required();
    CLI::Option* o_lmin = sweep->add_option("--lambda-min", sw.lambda_grid.min);
    CLI::Option* o_lmax = sweep->add_option("--lambda-max", sw.lambda_grid.max);
    CLI::Option* o_lsteps = sweep->add_option("--lambda-steps", sw.lambda_grid.steps);
    CLI::Option* o_mmin = sweep->add_option("--mu-min", sw.mu_grid.min);
    CLI::Option* o_mmax = sweep->add_option("--mu-max", sw.mu_grid.max);
    CLI::Option* o_msteps = sweep->add_option("--mu-steps", sw.mu_grid.steps);
    CLI::Option* o_trials = sweep->add_option("--trials", sw.trials);
    CLI::Option* o_methods =
        sweep->add_option("--methods", sweep_methods, "comma-separated method list");
    CLI::Option* o_n = sweep->add_option("--n", sw.base.n);
    CLI::Option* o_k = sweep->add_option("--k", sw.base.k);
    CLI::Option* o_d = sweep->add_option("--d", sw.base.d);
    CLI::Option* o_sigma = sweep->add_option("--sigma", sw.base.sigma);
    CLI::Option* o_mfeat = sweep->add_option("--m-feat", sw.base.m_feat);
    CLI::Option* o_seed = sweep->add_option("--seed", sw.master_seed);
    CLI::Option* o_workers = sweep->add_option("--workers", sw.workers);
    CLI::Option* o_agg = sweep->add_option("--aggregation", sweep_aggregation, "mean|max|both");
    CLI::Option* o_margin = sweep->add_option("--best-margin", sw.best_margin);
    CLI::Option* o_tail = sweep->add_option("--tail-mass", sw.tail_mass_bound);
    CLI::Option* o_hidden = sweep->add_option("--hidden", sw.train.hidden);
    CLI::Option* o_epochs = sweep->add_option("--epochs", sw.train.epochs);
    CLI::Option* o_lr = sweep->add_option("--lr", sw.train.learning_rate);
    CLI::Option* o_nosmooth = sweep->add_flag("--no-smoothing");
    CLI::Option* o_timings = sweep->add_flag("--record-timings");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) return run_generate(gen);
        if (theory->parsed()) return run_theory(th);
        if (eval->parsed()) return run_eval(ev);
        if (rewire->parsed()) return run_rewire(rw);
        if (sweep->parsed()) {
            SweepConfig cfg;
            if (!sweep_config_path.empty()) {
                std::ifstream in(sweep_config_path);
                if (!in) throw std::runtime_error(sweep_config_path + ": cannot open");
                nlohmann::json j;
                in >> j;
                cfg = sweep_config_from_json(j);
            }
            // Explicit flags override whatever the config file set.
            if (o_lmin->count()) cfg.lambda_grid.min = sw.lambda_grid.min;
            if (o_lmax->count()) cfg.lambda_grid.max = sw.lambda_grid.max;
            if (o_lsteps->count()) cfg.lambda_grid.steps = sw.lambda_grid.steps;
            if (o_mmin->count()) cfg.mu_grid.min = sw.mu_grid.min;
            if (o_mmax->count()) cfg.mu_grid.max = sw.mu_grid.max;
            if (o_msteps->count()) cfg.mu_grid.steps = sw.mu_grid.steps;
            if (o_trials->count()) cfg.trials = sw.trials;
            if (o_methods->count()) {
                cfg.methods.clear();
                std::string token;
                for (char c : sweep_methods + ",") {
                    if (c == ',') {
                        if (!token.empty()) cfg.methods.push_back(token);
                        token.clear();
                    } else {
                        token += c;
                    }
                }
            }
            if (o_n->count()) cfg.base.n = sw.base.n;
            if (o_k->count()) cfg.base.k = sw.base.k;
            if (o_d->count()) cfg.base.d = sw.base.d;
            if (o_sigma->count()) cfg.base.sigma = sw.base.sigma;
            if (o_mfeat->count()) cfg.base.m_feat = sw.base.m_feat;
            if (o_seed->count()) cfg.master_seed = sw.master_seed;
            if (o_workers->count()) cfg.workers = sw.workers;
            if (o_agg->count()) cfg.aggregation = parse_aggregation(sweep_aggregation);
            if (o_margin->count()) cfg.best_margin = sw.best_margin;
            if (o_tail->count()) cfg.tail_mass_bound = sw.tail_mass_bound;
            if (o_hidden->count()) cfg.train.hidden = sw.train.hidden;
            if (o_epochs->count()) cfg.train.epochs = sw.train.epochs;
            if (o_lr->count()) cfg.train.learning_rate = sw.train.learning_rate;
            if (o_nosmooth->count()) cfg.smoothing = false;
            if (o_timings->count()) cfg.record_timings = true;
            const bool ok = run_sweep_to_dir(cfg, sweep_out);
            std::cout << (ok ? "sweep complete\n" : "sweep finished with empty cells\n");
            return ok ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
