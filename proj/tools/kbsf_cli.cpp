// Command-line front end: collect samples, train/evaluate models, sweep
// kernel widths, benchmark runtime scaling, and emit bound diagnostics.

#include "kbsf/bounds.hpp"
#include "kbsf/csvio.hpp"
#include "kbsf/experiment.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace kbsf;
using nlohmann::json;

namespace {

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config: " + path);
    json j;
    in >> j;
    return ExperimentConfig::from_json(j);
}

void add_experiment_flags(CLI::App* cmd, ExperimentConfig& cfg, std::string& config_path) {
    cmd->add_option("--config", config_path, "JSON config file; flags override its fields");
    cmd->add_option("--task", cfg.task, "puddle | single_pole | double_pole | triple_pole");
    cmd->add_option("--algorithm", cfg.algorithm, "kbrl | kbsf | ikbsf");
    cmd->add_option("--n", cfg.n, "number of sample transitions");
    cmd->add_option("--m", cfg.m, "number of representative states");
    cmd->add_option("--tau", cfg.tau, "sample-kernel width");
    cmd->add_option("--taubar", cfg.taubar, "representative-kernel width");
    cmd->add_option("--mu", cfg.mu, "sample-kernel sparsity (0 = dense)");
    cmd->add_option("--mubar", cfg.mubar, "representative-kernel sparsity (0 = dense)");
    cmd->add_option("--gamma", cfg.gamma, "discount (negative = task default)");
    cmd->add_option("--runs", cfg.runs, "independent runs");
    cmd->add_option("--seed", cfg.seed, "master seed");
    cmd->add_option("--committee", cfg.committee, "agents voting per run");
    cmd->add_option("--workers", cfg.workers, "parallel worker threads");
    cmd->add_option("--query-mode", cfg.query_mode, "auto | full | reps");
    cmd->add_option("--out", cfg.out_dir, "output directory");
}

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    if (out.empty()) throw std::runtime_error("empty list: " + csv);
    return out;
}

void write_run_csv(const RunResult& result, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
    write_metrics_csv(result, out);
}

int cmd_collect(const std::string& task, std::size_t n, std::uint64_t seed,
                const std::string& out_path) {
    auto env = make_environment(task, seed);
    SampleSet samples = collect_samples(*env, n, seed);
    save_samples_csv_file(samples, out_path);
    std::cout << "wrote " << samples.total() << " transitions to " << out_path << "\n";
    return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& samples_path,
              const std::string& model_path) {
    auto env = make_environment(cfg.task, cfg.seed);
    const double gamma = cfg.gamma > 0.0 ? cfg.gamma : env->recommended_gamma();
    KernelSpec sample_kernel{MotherKernel::Exp, cfg.tau, cfg.mu};
    KernelSpec rep_kernel{MotherKernel::Exp, cfg.taubar, cfg.mubar};

    ReducedModel model;
    if (cfg.algorithm == "ikbsf") {
        SampleSet boot = collect_samples(*env, std::min<std::size_t>(cfg.n, 4096),
                                         derive_seed(cfg.seed, 4, 0));
        std::vector<State> ends;
        for (int a = 0; a < boot.num_actions(); ++a)
            for (const auto& t : boot.transitions(a)) ends.push_back(t.end);
        SelectionStrategy strat = cfg.selection;
        strat.m = cfg.m;
        strat.seed = derive_seed(cfg.seed, 2, 0);
        RepresentativeSet reps(select_representatives(strat, ends), rep_kernel);
        IncrementalConfig inc = cfg.incremental;
        inc.solver = cfg.solver;
        auto result = run_ikbsf(*env, std::move(reps), sample_kernel, inc,
                                static_cast<long>(cfg.n), derive_seed(cfg.seed, 6, 0));
        result.model.solve(cfg.solver);
        model = std::move(result.model);
    } else if (cfg.algorithm == "kbsf") {
        SampleSet samples = samples_path.empty()
                                ? collect_samples(*env, cfg.n, cfg.seed)
                                : load_samples_csv_file(samples_path);
        std::vector<State> ends;
        for (int a = 0; a < samples.num_actions(); ++a)
            for (const auto& t : samples.transitions(a)) ends.push_back(t.end);
        SelectionStrategy strat = cfg.selection;
        strat.m = cfg.m;
        strat.seed = derive_seed(cfg.seed, 2, 0);
        RepresentativeSet reps(select_representatives(strat, ends), rep_kernel);
        auto solution = batch_kbsf(samples, std::move(reps), sample_kernel, gamma, cfg.solver);
        model = std::move(solution.model);
    } else {
        throw std::runtime_error("train: only kbsf and ikbsf models can be saved");
    }
    std::ofstream out(model_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + model_path);
    model.save(out);
    std::cout << "wrote model (m=" << model.num_states() << ") to " << model_path << "\n";
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& task, std::uint64_t seed,
             const std::string& out_path) {
    std::ifstream in(model_path);
    if (!in) throw std::runtime_error("cannot open model: " + model_path);
    ReducedModel model = ReducedModel::load(in);
    if (!model.solved) model.solve();
    auto env = make_environment(task, seed);
    auto evaluator = make_reps_evaluator(model);
    EvalResult ev = evaluate_policy(*env, *evaluator, test_state_grid(task),
                                    model.mdp.gamma, seed);
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open for writing: " + out_path);
    out << "mean_return,success_rate\n"
        << ev.mean_return << ',' << ev.success_rate << '\n';
    std::cout << "mean_return=" << ev.mean_return << " success_rate=" << ev.success_rate
              << "\n";
    return 0;
}

int cmd_sweep(ExperimentConfig cfg, const std::vector<double>& taus,
              const std::vector<double>& taubars) {
    if (cfg.out_dir.empty()) throw std::runtime_error("sweep: --out directory required");
    fs::create_directories(cfg.out_dir);
    std::ofstream summary(fs::path(cfg.out_dir) / "summary.csv");
    summary << "tau,taubar,metric_mean,metric_stddev,metric_ci99_half_width,runs\n";
    double best = -std::numeric_limits<double>::infinity();
    double best_tau = 0.0, best_taubar = 0.0;
    for (double tau : taus)
        for (double taubar : taubars) {
            ExperimentConfig c = cfg;
            c.tau = tau;
            c.taubar = taubar;
            RunResult result = run_experiment(c);
            Summary s = aggregate(headline_metric(result));
            summary << tau << ',' << taubar << ',' << s.mean << ',' << s.stddev << ','
                    << s.half_width_99 << ',' << s.count << '\n';
            std::ostringstream name;
            name << "runs_tau" << tau << "_taubar" << taubar << ".csv";
            write_run_csv(result, fs::path(cfg.out_dir) / name.str());
            if (s.mean > best) {
                best = s.mean;
                best_tau = tau;
                best_taubar = taubar;
            }
            std::cout << "tau=" << tau << " taubar=" << taubar << " mean=" << s.mean
                      << " +-" << s.half_width_99 << "\n";
        }
    summary << "# best,tau=" << best_tau << ",taubar=" << best_taubar << ",mean=" << best
            << '\n';
    std::cout << "best-of-grid mean=" << best << " (tau=" << best_tau
              << ", taubar=" << best_taubar << ")\n";
    return 0;
}

int cmd_bench(ExperimentConfig cfg, const std::vector<double>& n_list,
              const std::string& out_path) {
    std::ofstream out(out_path.empty() ? "/dev/stdout" : out_path);
    out << "algorithm,n,build_seconds,solve_seconds\n";
    for (double nd : n_list) {
        ExperimentConfig c = cfg;
        c.n = static_cast<std::size_t>(nd);
        c.runs = 1;
        RunResult result = run_experiment(c);
        out << c.algorithm << ',' << c.n << ',' << result.runs[0].build_seconds << ','
            << result.runs[0].solve_seconds << '\n';
        std::cout << c.algorithm << " n=" << c.n << " build=" << result.runs[0].build_seconds
                  << "s solve=" << result.runs[0].solve_seconds << "s\n";
    }
    return 0;
}

int cmd_diagnose(const ExperimentConfig& cfg, const std::string& samples_path,
                 const std::string& out_path) {
    auto env = make_environment(cfg.task, cfg.seed);
    const double gamma = cfg.gamma > 0.0 ? cfg.gamma : env->recommended_gamma();
    SampleSet samples = samples_path.empty() ? collect_samples(*env, cfg.n, cfg.seed)
                                             : load_samples_csv_file(samples_path);
    if (samples.total() > 2000)
        throw std::runtime_error("diagnose: bound reports are capped to n <= 2000");

    KernelSpec sample_kernel{MotherKernel::Exp, cfg.tau, cfg.mu};
    KernelSpec rep_kernel{MotherKernel::Exp, cfg.taubar, cfg.mubar};
    std::vector<State> ends;
    for (int a = 0; a < samples.num_actions(); ++a)
        for (const auto& t : samples.transitions(a)) ends.push_back(t.end);
    SelectionStrategy strat = cfg.selection;
    strat.m = cfg.m;
    strat.seed = derive_seed(cfg.seed, 2, 0);
    RepresentativeSet reps(select_representatives(strat, ends), rep_kernel);

    KbrlModel kbrl = build_kbrl(samples, sample_kernel, gamma);
    solve_kbrl(kbrl, cfg.solver);
    Factorization f = build_factorization(samples, reps, sample_kernel);
    ReducedModel reduced = swap_factors(f, std::move(reps), sample_kernel, gamma);
    reduced.solve(cfg.solver);

    BoundReport report = xi_v_report(kbrl, f, reduced);
    report.epsilon_qbar = epsilon_qbar(reduced);
    json j = report.to_json();
    j["prop2_query_bound"] = prop2_query_bound(report);
    j["prop4_online_bound"] = prop4_from_report(report, *report.epsilon_qbar);

    std::ofstream out(out_path.empty() ? "/dev/stdout" : out_path);
    out << j.dump(2) << '\n';
    if (!out_path.empty()) std::cout << "wrote " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kernel-based stochastic factorization toolkit"};
    app.require_subcommand(1);

    ExperimentConfig cfg;
    std::string config_path, samples_path, model_path, out_path;
    std::string taus = "0.01,0.1,1", taubars = "0.01,0.1,1", n_list = "10000,100000";

    auto* collect = app.add_subcommand("collect", "sample transitions to CSV");
    add_experiment_flags(collect, cfg, config_path);

    auto* train = app.add_subcommand("train", "build a model and save it");
    add_experiment_flags(train, cfg, config_path);
    train->add_option("--samples", samples_path, "input sample CSV (else collects fresh)");
    train->add_option("--model", model_path, "output model file")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a saved model on the test grid");
    add_experiment_flags(eval, cfg, config_path);
    eval->add_option("--model", model_path, "model file")->required();

    auto* sweep = app.add_subcommand("sweep", "grid over kernel widths");
    add_experiment_flags(sweep, cfg, config_path);
    sweep->add_option("--taus", taus, "comma-separated tau grid");
    sweep->add_option("--taubars", taubars, "comma-separated tau-bar grid");

    auto* bench = app.add_subcommand("bench", "runtime scaling over n");
    add_experiment_flags(bench, cfg, config_path);
    bench->add_option("--n-list", n_list, "comma-separated transition counts");

    auto* diagnose = app.add_subcommand("diagnose", "bound report for a small model");
    add_experiment_flags(diagnose, cfg, config_path);
    diagnose->add_option("--samples", samples_path, "input sample CSV (else collects fresh)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!config_path.empty()) {
            // config file first, then re-parse so explicit flags win
            cfg = load_config(config_path);
            CLI::App reparse{"reparse"};
            reparse.require_subcommand(1);
            std::string ignored;
            for (const char* name : {"collect", "train", "eval", "sweep", "bench", "diagnose"}) {
                auto* sub = reparse.add_subcommand(name, "");
                add_experiment_flags(sub, cfg, ignored);
                sub->allow_extras();
            }
            reparse.parse(argc, argv);
        }
        cfg.validate();

        if (app.got_subcommand(collect))
            return cmd_collect(cfg.task, cfg.n, cfg.seed,
                               cfg.out_dir.empty() ? "samples.csv" : cfg.out_dir);
        if (app.got_subcommand(train)) return cmd_train(cfg, samples_path, model_path);
        if (app.got_subcommand(eval)) return cmd_eval(model_path, cfg.task, cfg.seed, out_path.empty() ? "metrics.csv" : out_path);
        if (app.got_subcommand(sweep)) return cmd_sweep(cfg, parse_list(taus), parse_list(taubars));
        if (app.got_subcommand(bench)) return cmd_bench(cfg, parse_list(n_list), out_path);
        if (app.got_subcommand(diagnose)) return cmd_diagnose(cfg, samples_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
