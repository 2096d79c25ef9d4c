#include "kbsf/experiment.hpp"

#include "kbsf/cartpole.hpp"

#include <nlohmann/json.hpp>

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

namespace kbsf {

using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
    // splitmix64 over a combined word
    std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream * 0x100000001b3ULL + index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

SampleSet collect_samples(Environment& env, std::size_t n, std::uint64_t seed) {
    env.reseed(seed);
    std::mt19937_64 rng(derive_seed(seed, 17, 0));
    std::uniform_int_distribution<int> any(0, env.num_actions() - 1);
    SampleSet samples(env.num_actions());
    State s = env.reset();
    while (samples.total() < n) {
        int a = any(rng);
        StepResult r = env.step(a);
        samples.add(s, a, r.reward, r.next);
        s = r.terminal ? env.reset() : r.next;
    }
    return samples;
}

int ActionValueModel::greedy_action(const State& s) const {
    int best = 0;
    double best_q = q(s, 0);
    for (int a = 1; a < num_actions(); ++a) {
        double v = q(s, a);
        if (v > best_q) {
            best_q = v;
            best = a;
        }
    }
    return best;
}

namespace {

// Vectorized normalized-kernel query against fixed per-action start states:
// q(s,a) = kappa^a(s, .) . bracket_a, with bracket_i = r_i + gamma * v(end_i).
class KernelQueryEvaluator final : public ActionValueModel {
public:
    KernelQueryEvaluator(const SampleSet& samples, const KernelSpec& kernel,
                         const Vec& values, double gamma)
        : kernel_(kernel) {
        const int A = samples.num_actions();
        starts_.resize(A);
        brackets_.resize(A);
        const int d = samples.dim();
        Vec w = kernel.norm_weights;
        for (int a = 0; a < A; ++a) {
            const auto& trs = samples.transitions(a);
            Mat m(trs.size(), d);
            Vec b(trs.size());
            for (std::size_t i = 0; i < trs.size(); ++i) {
                State st = trs[i].start;
                if (w.size() != 0) st = st.cwiseProduct(w);
                m.row(static_cast<Eigen::Index>(i)) = st.transpose();
                b(static_cast<Eigen::Index>(i)) =
                    trs[i].reward +
                    gamma * values(static_cast<Eigen::Index>(samples.offset(a) + i));
            }
            starts_[a] = std::move(m);
            brackets_[a] = std::move(b);
        }
    }

    int num_actions() const override { return static_cast<int>(starts_.size()); }

    double q(const State& s, int a) const override {
        State sq = kernel_.norm_weights.size() != 0 ? State(s.cwiseProduct(kernel_.norm_weights))
                                                    : s;
        Vec dist =
            (starts_[a].rowwise() - sq.transpose()).rowwise().norm();
        // softmax shift relative to the nearest start keeps narrow kernels
        // from underflowing the whole row
        double best = dist.minCoeff();
        Eigen::ArrayXd kappa;
        if (kernel_.phi == MotherKernel::Exp)
            kappa = (-(dist.array() - best) / kernel_.tau).exp();
        else
            kappa = ((best * best - dist.array().square()) / (kernel_.tau * kernel_.tau))
                        .exp();
        if (kernel_.mu > 0 && kernel_.mu < dist.size()) {
            // keep only the mu nearest entries
            std::vector<std::pair<double, Eigen::Index>> order(dist.size());
            for (Eigen::Index i = 0; i < dist.size(); ++i) order[i] = {dist(i), i};
            std::nth_element(order.begin(), order.begin() + kernel_.mu - 1, order.end());
            double cutoff = order[kernel_.mu - 1].first;
            Eigen::ArrayXd masked = Eigen::ArrayXd::Zero(dist.size());
            int kept = 0;
            for (Eigen::Index i = 0; i < dist.size() && kept < kernel_.mu; ++i)
                if (dist(i) <= cutoff) {
                    masked(i) = kappa(i);
                    ++kept;
                }
            kappa = masked;
        }
        double mass = kappa.sum();
        if (!(mass > 0.0))
            throw std::runtime_error("query: all kernel values are zero (isolated state)");
        return (kappa * brackets_[a].array()).sum() / mass;
    }

private:
    KernelSpec kernel_;
    std::vector<Mat> starts_;    // weight-scaled
    std::vector<Vec> brackets_;
};

class RepsEvaluator final : public ActionValueModel {
public:
    explicit RepsEvaluator(const ReducedModel& model) : model_(model) {}
    int num_actions() const override { return model_.num_actions(); }
    double q(const State& s, int a) const override { return ikbsf_q(model_, s, a); }
    int greedy_action(const State& s) const override {
        Vec d = model_.reps.smoothing_row(s);
        Vec qs = model_.qbar.transpose() * d;
        int best = 0;
        for (int a = 1; a < model_.num_actions(); ++a)
            if (qs(a) > qs(best)) best = a;
        return best;
    }

private:
    const ReducedModel& model_;
};

}  // namespace

std::unique_ptr<ActionValueModel> make_kbrl_evaluator(const KbrlModel& model) {
    if (!model.vstar()) throw std::logic_error("make_kbrl_evaluator: unsolved model");
    return std::make_unique<KernelQueryEvaluator>(model.samples(), model.kernel(),
                                                  model.vstar()->v, model.gamma());
}

std::unique_ptr<ActionValueModel> make_kbsf_evaluator(const KbsfSolution& solution,
                                                      const SampleSet& samples) {
    return std::make_unique<KernelQueryEvaluator>(samples, solution.model.sample_kernel,
                                                  solution.vtilde, solution.model.mdp.gamma);
}

std::unique_ptr<ActionValueModel> make_reps_evaluator(const ReducedModel& model) {
    return std::make_unique<RepsEvaluator>(model);
}

int committee_decide(const std::vector<const ActionValueModel*>& agents, const State& s,
                     std::mt19937_64& rng) {
    if (agents.empty()) throw std::invalid_argument("committee_decide: no agents");
    const int A = agents[0]->num_actions();
    std::vector<int> votes(A, 0);
    for (const auto* agent : agents) ++votes[agent->greedy_action(s)];
    int top = *std::max_element(votes.begin(), votes.end());
    std::vector<int> tied;
    for (int a = 0; a < A; ++a)
        if (votes[a] == top) tied.push_back(a);
    if (tied.size() == 1) return tied[0];
    std::uniform_int_distribution<std::size_t> pick(0, tied.size() - 1);
    return tied[pick(rng)];
}

namespace {

EvalResult rollout(Environment& env, const std::vector<State>& test_states, double gamma,
                   std::uint64_t seed,
                   const std::function<int(const State&)>& act) {
    env.reseed(seed);
    EvalResult out;
    for (const auto& start : test_states) {
        State s = env.reset_to(start);
        double ret = 0.0, discount = 1.0;
        while (true) {
            StepResult r = env.step(act(s));
            ret += discount * r.reward;
            discount *= gamma;
            if (r.terminal) {
                if (r.goal) out.success_rate += 1.0;
                break;
            }
            s = r.next;
        }
        out.mean_return += ret;
    }
    out.mean_return /= static_cast<double>(test_states.size());
    out.success_rate /= static_cast<double>(test_states.size());
    return out;
}

}  // namespace

EvalResult evaluate_policy(Environment& env, const ActionValueModel& model,
                           const std::vector<State>& test_states, double gamma,
                           std::uint64_t seed) {
    return rollout(env, test_states, gamma, seed,
                   [&model](const State& s) { return model.greedy_action(s); });
}

EvalResult evaluate_committee(Environment& env,
                              const std::vector<const ActionValueModel*>& agents,
                              const std::vector<State>& test_states, double gamma,
                              std::uint64_t seed) {
    std::mt19937_64 rng(derive_seed(seed, 23, 0));
    return rollout(env, test_states, gamma, seed, [&](const State& s) {
        return committee_decide(agents, s, rng);
    });
}

void ExperimentConfig::validate() const {
    if (algorithm != "kbrl" && algorithm != "kbsf" && algorithm != "ikbsf")
        throw std::invalid_argument("ExperimentConfig: unknown algorithm " + algorithm);
    if (!(tau > 0.0) || !(taubar > 0.0))
        throw std::invalid_argument("ExperimentConfig: kernel widths must be positive");
    if (runs < 1) throw std::invalid_argument("ExperimentConfig: runs must be at least 1");
    if (n < 1) throw std::invalid_argument("ExperimentConfig: n must be at least 1");
    if (committee < 1) throw std::invalid_argument("ExperimentConfig: committee size >= 1");
    if (query_mode != "auto" && query_mode != "full" && query_mode != "reps")
        throw std::invalid_argument("ExperimentConfig: unknown query mode " + query_mode);
}

json ExperimentConfig::to_json() const {
    json j;
    j["task"] = task;
    j["algorithm"] = algorithm;
    j["n"] = n;
    j["m"] = m;
    j["tau"] = tau;
    j["taubar"] = taubar;
    j["mu"] = mu;
    j["mubar"] = mubar;
    j["selection"] = selection.kind == SelectionStrategy::Kind::KMeans ? "kmeans"
                     : selection.kind == SelectionStrategy::Kind::Random ? "random"
                                                                         : "grid";
    j["kmeans_max_iters"] = selection.kmeans_max_iters;
    j["gamma"] = gamma;
    j["runs"] = runs;
    j["seed"] = seed;
    j["committee"] = committee;
    j["workers"] = workers;
    j["query_mode"] = query_mode;
    j["solver"] = {{"epsilon", solver.epsilon},
                   {"max_policy_iterations", solver.max_policy_iterations},
                   {"inner_eval_sweeps", solver.inner_eval_sweeps}};
    j["incremental"] = {{"t_m", incremental.t_m},
                        {"t_v", incremental.t_v},
                        {"epsilon_greedy", incremental.epsilon_greedy},
                        {"growth_threshold", incremental.growth_threshold}};
    j["out_dir"] = out_dir;
    return j;
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    ExperimentConfig c;
    c.task = j.value("task", c.task);
    c.algorithm = j.value("algorithm", c.algorithm);
    c.n = j.value("n", c.n);
    c.m = j.value("m", c.m);
    c.tau = j.value("tau", c.tau);
    c.taubar = j.value("taubar", c.taubar);
    c.mu = j.value("mu", c.mu);
    c.mubar = j.value("mubar", c.mubar);
    std::string sel = j.value("selection", std::string("kmeans"));
    if (sel == "kmeans") c.selection.kind = SelectionStrategy::Kind::KMeans;
    else if (sel == "random") c.selection.kind = SelectionStrategy::Kind::Random;
    else if (sel == "grid") c.selection.kind = SelectionStrategy::Kind::Grid;
    else throw std::invalid_argument("ExperimentConfig: unknown selection " + sel);
    c.selection.kmeans_max_iters = j.value("kmeans_max_iters", 100);
    c.gamma = j.value("gamma", c.gamma);
    c.runs = j.value("runs", c.runs);
    c.seed = j.value("seed", c.seed);
    c.committee = j.value("committee", c.committee);
    c.workers = j.value("workers", c.workers);
    c.query_mode = j.value("query_mode", c.query_mode);
    if (j.contains("solver")) {
        const auto& s = j.at("solver");
        c.solver.epsilon = s.value("epsilon", c.solver.epsilon);
        c.solver.max_policy_iterations =
            s.value("max_policy_iterations", c.solver.max_policy_iterations);
        c.solver.inner_eval_sweeps = s.value("inner_eval_sweeps", c.solver.inner_eval_sweeps);
    }
    if (j.contains("incremental")) {
        const auto& s = j.at("incremental");
        c.incremental.t_m = s.value("t_m", c.incremental.t_m);
        c.incremental.t_v = s.value("t_v", c.incremental.t_v);
        c.incremental.epsilon_greedy =
            s.value("epsilon_greedy", c.incremental.epsilon_greedy);
        c.incremental.growth_threshold =
            s.value("growth_threshold", c.incremental.growth_threshold);
    }
    c.out_dir = j.value("out_dir", c.out_dir);
    c.validate();
    return c;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<State> pooled_end_states(const SampleSet& samples) {
    std::vector<State> ends;
    ends.reserve(samples.total());
    for (int a = 0; a < samples.num_actions(); ++a)
        for (const auto& t : samples.transitions(a)) ends.push_back(t.end);
    return ends;
}

// exact-duplicate centers cannot serve as representative states
std::vector<State> dedupe(std::vector<State> states) {
    std::vector<State> out;
    for (auto& s : states) {
        bool dup = false;
        for (const auto& o : out)
            if (o == s) { dup = true; break; }
        if (!dup) out.push_back(std::move(s));
    }
    return out;
}

RunMetrics execute_single_run(const ExperimentConfig& cfg, int run_index) {
    RunMetrics metrics;
    metrics.run = run_index;

    const std::uint64_t collect_seed = derive_seed(cfg.seed, 1, run_index);
    const std::uint64_t select_seed = derive_seed(cfg.seed, 2, run_index);
    const std::uint64_t eval_seed = derive_seed(cfg.seed, 3, run_index);

    auto env = make_environment(cfg.task, collect_seed);
    const double gamma = cfg.gamma > 0.0 ? cfg.gamma : env->recommended_gamma();
    auto test_states = test_state_grid(cfg.task);

    KernelSpec sample_kernel;
    sample_kernel.tau = cfg.tau;
    sample_kernel.mu = cfg.mu;
    KernelSpec rep_kernel;
    rep_kernel.tau = cfg.taubar;
    rep_kernel.mu = cfg.mubar;
    if (cfg.task.find("pole") != std::string::npos) {
        // rescale each axis by the evaluation-region half-width so the
        // kernel widths act on comparable magnitudes
        auto bounds = PoleBalance::grid_bounds(env->state_dim() / 2 - 1);
        Vec w(env->state_dim());
        for (int i = 0; i < env->state_dim(); ++i) w(i) = 1.0 / bounds[i];
        sample_kernel.norm_weights = w;
        rep_kernel.norm_weights = w;
    }

    const bool full_query = cfg.query_mode == "full" ||
                            (cfg.query_mode == "auto" && cfg.task == "puddle");

    if (cfg.algorithm == "ikbsf") {
        IncrementalConfig inc = cfg.incremental;
        inc.solver = cfg.solver;
        // bootstrap representative states from a prefix of random experience
        std::size_t prefix = std::min<std::size_t>(cfg.n, 4096);
        SampleSet boot = collect_samples(*env, prefix, derive_seed(cfg.seed, 4, run_index));
        SelectionStrategy strat = cfg.selection;
        strat.m = cfg.m;
        strat.seed = select_seed;
        auto centers = dedupe(
            select_representatives(strat, pooled_end_states(boot), rep_kernel.norm_weights));
        RepresentativeSet reps(centers, rep_kernel);

        auto t0 = Clock::now();
        env->reseed(derive_seed(cfg.seed, 5, run_index));
        auto result = run_ikbsf(*env, std::move(reps), sample_kernel, inc,
                                static_cast<long>(cfg.n), derive_seed(cfg.seed, 6, run_index));
        metrics.build_seconds = seconds_since(t0);
        auto t1 = Clock::now();
        result.model.solve(cfg.solver);
        metrics.solve_seconds = seconds_since(t1);
        metrics.final_m = result.model.num_states();

        auto eval_env = make_environment(cfg.task, eval_seed);
        auto evaluator = make_reps_evaluator(result.model);
        EvalResult ev = evaluate_policy(*eval_env, *evaluator, test_states, gamma, eval_seed);
        metrics.mean_return = ev.mean_return;
        metrics.success_rate = ev.success_rate;
        return metrics;
    }

    SampleSet samples = collect_samples(*env, cfg.n, collect_seed);

    if (cfg.algorithm == "kbrl") {
        auto t0 = Clock::now();
        KbrlModel model = build_kbrl(std::move(samples), sample_kernel, gamma);
        metrics.build_seconds = seconds_since(t0);
        auto t1 = Clock::now();
        solve_kbrl(model, cfg.solver);
        metrics.solve_seconds = seconds_since(t1);
        metrics.final_m = model.num_states();

        auto eval_env = make_environment(cfg.task, eval_seed);
        auto evaluator = make_kbrl_evaluator(model);
        EvalResult ev = evaluate_policy(*eval_env, *evaluator, test_states, gamma, eval_seed);
        metrics.mean_return = ev.mean_return;
        metrics.success_rate = ev.success_rate;
        return metrics;
    }

    // kbsf, possibly as a committee of independently built agents
    std::vector<KbsfSolution> solutions;
    std::vector<std::unique_ptr<ActionValueModel>> evaluators;
    for (int agent = 0; agent < cfg.committee; ++agent) {
        SelectionStrategy strat = cfg.selection;
        strat.m = cfg.m;
        strat.seed = derive_seed(select_seed, 7, agent);
        if (cfg.committee > 1) strat.kind = SelectionStrategy::Kind::Random;
        auto t0 = Clock::now();
        auto centers = dedupe(select_representatives(strat, pooled_end_states(samples),
                                                     rep_kernel.norm_weights));
        RepresentativeSet reps(centers, rep_kernel);
        Factorization f = build_factorization(samples, reps, sample_kernel);
        ReducedModel model = swap_factors(f, std::move(reps), sample_kernel, gamma);
        metrics.build_seconds += seconds_since(t0);
        auto t1 = Clock::now();
        model.solve(cfg.solver);
        Vec vtilde(static_cast<Eigen::Index>(samples.total()));
        for (int a = 0; a < samples.num_actions(); ++a) {
            Mat dq = f.ddot[a] * model.qbar;
            vtilde.segment(static_cast<Eigen::Index>(samples.offset(a)), dq.rows()) =
                dq.rowwise().maxCoeff();
        }
        metrics.solve_seconds += seconds_since(t1);
        solutions.push_back(KbsfSolution{std::move(model), std::move(vtilde)});
    }
    metrics.final_m = solutions.front().model.num_states();
    for (const auto& sol : solutions)
        evaluators.push_back(full_query ? make_kbsf_evaluator(sol, samples)
                                        : make_reps_evaluator(sol.model));

    auto eval_env = make_environment(cfg.task, eval_seed);
    EvalResult ev;
    if (evaluators.size() == 1) {
        ev = evaluate_policy(*eval_env, *evaluators[0], test_states, gamma, eval_seed);
    } else {
        std::vector<const ActionValueModel*> agents;
        for (const auto& e : evaluators) agents.push_back(e.get());
        ev = evaluate_committee(*eval_env, agents, test_states, gamma, eval_seed);
    }
    metrics.mean_return = ev.mean_return;
    metrics.success_rate = ev.success_rate;
    return metrics;
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& config) {
    config.validate();
    RunResult result;
    result.config = config;
    result.runs.resize(config.runs);

    const int workers = std::max(1, std::min(config.workers, config.runs));
    std::atomic<int> next{0};
    std::mutex error_mutex;
    std::exception_ptr first_error;

    auto worker = [&]() {
        while (true) {
            int idx = next.fetch_add(1);
            if (idx >= config.runs) return;
            try {
                result.runs[idx] = execute_single_run(config, idx);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (first_error) std::rethrow_exception(first_error);
    return result;
}

Summary aggregate(const std::vector<double>& values) {
    Summary s;
    s.count = static_cast<int>(values.size());
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / s.count;
    if (s.count < 2) return s;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / (s.count - 1));
    boost::math::students_t dist(s.count - 1);
    double t = boost::math::quantile(dist, 0.995);
    s.half_width_99 = t * s.stddev / std::sqrt(static_cast<double>(s.count));
    return s;
}

std::vector<double> headline_metric(const RunResult& result) {
    std::vector<double> values;
    values.reserve(result.runs.size());
    const bool pole = result.config.task.find("pole") != std::string::npos;
    for (const auto& r : result.runs)
        values.push_back(pole ? r.success_rate : r.mean_return);
    return values;
}

void write_metrics_csv(const RunResult& result, std::ostream& out, bool include_timing) {
    out << "run,mean_return,success_rate,final_m";
    if (include_timing) out << ",build_seconds,solve_seconds";
    out << '\n';
    out << std::setprecision(17);
    for (const auto& r : result.runs) {
        out << r.run << ',' << r.mean_return << ',' << r.success_rate << ',' << r.final_m;
        if (include_timing)
            out << ',' << std::setprecision(6) << r.build_seconds << ',' << r.solve_seconds
                << std::setprecision(17);
        out << '\n';
    }
}

}  // namespace kbsf
