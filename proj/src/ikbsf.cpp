#include "kbsf/ikbsf.hpp"

#include <chrono>
#include <cmath>

namespace kbsf {

void IncrementalConfig::validate() const {
    if (t_m < 1 || t_v < 1)
        throw std::invalid_argument("IncrementalConfig: update intervals must be at least 1");
    if (epsilon_greedy < 0.0 || epsilon_greedy > 1.0)
        throw std::invalid_argument("IncrementalConfig: epsilon must lie in [0, 1]");
    if (growth_threshold < 0.0)
        throw std::invalid_argument("IncrementalConfig: growth threshold must be nonnegative");
    if (max_batch_buffer < 1)
        throw std::invalid_argument("IncrementalConfig: buffer size must be at least 1");
}

namespace {

using SparseRow = std::vector<std::pair<int, double>>;

// Surviving (index, distance) pairs of `center` against `points`, honoring
// mu-truncation within this point set.
SparseRow surviving_distances(const KernelSpec& spec, const State& center,
                              const std::vector<State>& points,
                              const NeighborIndex* index) {
    SparseRow out;
    const int n = static_cast<int>(points.size());
    if (spec.mu > 0 && spec.mu < n && index != nullptr) {
        for (const auto& h : index->nearest(center, spec.mu))
            out.emplace_back(h.index, h.distance);
    } else if (spec.mu > 0 && spec.mu < n) {
        std::vector<std::pair<double, int>> all(n);
        for (int i = 0; i < n; ++i) all[i] = {spec.distance(center, points[i]), i};
        std::partial_sort(all.begin(), all.begin() + spec.mu, all.end());
        for (int i = 0; i < spec.mu; ++i) out.emplace_back(all[i].second, all[i].first);
    } else {
        out.reserve(n);
        for (int i = 0; i < n; ++i)
            out.emplace_back(i, spec.distance(center, points[i]));
    }
    return out;
}

// Raw kernel values at the surviving entries.
SparseRow raw_entries(const KernelSpec& spec, const State& center,
                      const std::vector<State>& points, const NeighborIndex* index) {
    SparseRow out = surviving_distances(spec, center, points, index);
    for (auto& [i, d] : out) d = spec.phi_value(d / spec.tau);
    return out;
}

// Normalized kernel row at the surviving entries, via the same softmax
// shift normalized_row applies.
SparseRow normalized_entries(const KernelSpec& spec, const State& center,
                             const std::vector<State>& points,
                             const NeighborIndex* index) {
    SparseRow out = surviving_distances(spec, center, points, index);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [i, d] : out) best = std::min(best, d);
    const double log_peak = spec.log_phi(best / spec.tau);
    long double mass = 0.0L;
    for (auto& [i, d] : out) {
        d = std::exp(spec.log_phi(d / spec.tau) - log_peak);
        mass += d;
    }
    if (!(mass > 0.0L))
        throw std::runtime_error("update_model: end state has zero kernel mass "
                                 "against every representative state");
    for (auto& [i, d] : out) d = static_cast<double>(d / mass);
    return out;
}

}  // namespace

UpdateReport update_model(ReducedModel& model, const SampleSet& batch) {
    UpdateReport report;
    if (batch.total() == 0) return report;
    if (batch.num_actions() != model.num_actions())
        throw std::invalid_argument("update_model: action count mismatch");
    if (batch.dim() != model.reps.state(0).size())
        throw std::invalid_argument("update_model: state dimension mismatch");

    const int m = model.num_states();
    const KernelSpec& kspec = model.sample_kernel;
    const KernelSpec& dspec = model.reps.kernel();

    for (int a = 0; a < batch.num_actions(); ++a) {
        const auto& trs = batch.transitions(a);
        if (trs.empty()) continue;
        const int nt = static_cast<int>(trs.size());

        std::vector<State> starts;
        starts.reserve(nt);
        for (const auto& t : trs) starts.push_back(t.start);
        NeighborIndex start_index;
        if (kspec.mu > 0 && kspec.mu < nt)
            start_index = NeighborIndex(starts, kspec.norm_weights);
        const NeighborIndex* sidx = start_index.empty() ? nullptr : &start_index;

        // normalized smoothing rows of the batch end states (mu-bar aware)
        std::vector<SparseRow> drow(nt);
        for (int t = 0; t < nt; ++t)
            drow[t] = normalized_entries(dspec, trs[t].end, model.reps.states(),
                                         &model.reps.index());

        std::vector<long double> b(m), e_acc;
        Mat& P = model.mdp.P[a];
        Vec& r = model.mdp.r[a];
        Vec& w = model.w[a];
        for (int i = 0; i < m; ++i) {
            SparseRow krow = raw_entries(kspec, model.reps.state(i), starts, sidx);
            long double wprime = 0.0L, e = 0.0L;
            std::fill(b.begin(), b.end(), 0.0L);
            for (const auto& [t, kval] : krow) {
                wprime += kval;
                e += static_cast<long double>(kval) * trs[t].reward;
                for (const auto& [j, dval] : drow[t])
                    b[j] += static_cast<long double>(kval) * dval;
            }
            const double w_old = w(i);
            const double w_new = w_old + static_cast<double>(wprime);
            if (w_new == 0.0) {
                report.zero_mass_rows.emplace_back(a, i);
                continue;
            }
            for (int j = 0; j < m; ++j)
                P(i, j) = (static_cast<double>(b[j]) + P(i, j) * w_old) / w_new;
            r(i) = (static_cast<double>(e) + r(i) * w_old) / w_new;
            w(i) = w_new;
            double row_sum = P.row(i).sum();
            if (row_sum > 0.0) P.row(i) /= row_sum;
        }
        report.transitions_absorbed += trs.size();
    }
    return report;
}

void add_representative_state(ReducedModel& model, const State& s_new) {
    model.reps.add_state(s_new);  // throws on duplicates
    const int m = model.num_states();
    for (int a = 0; a < model.num_actions(); ++a) {
        Mat P = Mat::Zero(m + 1, m + 1);
        P.topLeftCorner(m, m) = model.mdp.P[a];
        model.mdp.P[a] = std::move(P);
        model.mdp.r[a].conservativeResize(m + 1);
        model.mdp.r[a](m) = 0.0;
        model.w[a].conservativeResize(m + 1);
        model.w[a](m) = 0.0;
    }
    Mat qbar = Mat::Zero(m + 1, model.num_actions());
    qbar.topRows(m) = model.qbar;
    model.qbar = std::move(qbar);
    model.mdp.num_states = m + 1;
}

double ikbsf_q(const ReducedModel& model, const State& s, int a) {
    if (a < 0 || a >= model.num_actions())
        throw std::invalid_argument("ikbsf_q: action index out of range");
    Vec row = model.reps.smoothing_row(s);
    return row.dot(model.qbar.col(a));
}

namespace {

int epsilon_greedy_action(const ReducedModel& model, const State& s, double epsilon,
                          std::mt19937_64& rng) {
    const int A = model.num_actions();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> any(0, A - 1);
    if (unit(rng) < epsilon) return any(rng);
    Vec row = model.reps.smoothing_row(s);
    Vec q = model.qbar.transpose() * row;
    double best = q.maxCoeff();
    std::vector<int> ties;
    for (int a = 0; a < A; ++a)
        if (q(a) == best) ties.push_back(a);
    if (ties.size() == 1) return ties[0];
    std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
    return ties[pick(rng)];
}

}  // namespace

IkbsfRunResult run_ikbsf(Environment& env, RepresentativeSet reps_initial,
                         const KernelSpec& sample_kernel, const IncrementalConfig& config,
                         long total_steps, std::uint64_t seed, const ActionCallback& act,
                         const LogSink& log_sink) {
    config.validate();
    if (total_steps < 1) throw std::invalid_argument("run_ikbsf: total_steps must be positive");
    const int A = env.num_actions();

    IkbsfRunResult result;
    ReducedModel& model = result.model;
    model.reps = std::move(reps_initial);
    model.sample_kernel = sample_kernel;
    model.sample_kernel.validate();
    const int m0 = model.reps.size();
    model.mdp.num_states = m0;
    model.mdp.gamma = env.recommended_gamma();
    model.mdp.P.assign(A, Mat::Zero(m0, m0));
    model.mdp.r.assign(A, Vec::Zero(m0));
    model.w.assign(A, Vec::Zero(m0));
    model.qbar = Mat::Zero(m0, A);

    std::mt19937_64 rng(seed);
    SampleSet buffer(A);
    State s = env.reset();
    result.episodes = 1;
    result.rep_count_trajectory.emplace_back(0, model.num_states());
    result.log.reserve(static_cast<std::size_t>(std::min<long>(total_steps, 1 << 20)));

    for (long t = 1; t <= total_steps; ++t) {
        auto t0 = std::chrono::steady_clock::now();
        int a = act ? act(s, model, rng)
                    : epsilon_greedy_action(model, s, config.epsilon_greedy, rng);
        StepResult sr = env.step(a);
        buffer.add(s, a, sr.reward, sr.next);
        result.peak_buffered_transitions =
            std::max(result.peak_buffered_transitions, buffer.total());

        bool do_model = (t % config.t_m == 0) || buffer.total() >= config.max_batch_buffer;
        bool do_value = (t % config.t_v == 0);
        if (do_model) {
            if (config.growth_threshold > 0.0) {
                for (int b = 0; b < A; ++b)
                    for (const auto& tr : buffer.transitions(b)) {
                        auto hit = model.reps.index().nearest(tr.end, 1);
                        double k = model.reps.kernel().phi_value(hit[0].distance /
                                                                 model.reps.kernel().tau);
                        if (k < config.growth_threshold)
                            add_representative_state(model, tr.end);
                    }
            }
            update_model(model, buffer);
            ++result.model_updates;
            buffer = SampleSet(A);  // transitions are not retained
            result.rep_count_trajectory.emplace_back(t, model.num_states());
        }
        if (do_value) {
            model.solve(config.solver);
            ++result.value_updates;
        }
        auto t1 = std::chrono::steady_clock::now();

        EpisodeLogRow row{t,        static_cast<int>(result.episodes),
                          sr.reward, a,
                          model.num_states(), do_model,
                          do_value, std::chrono::duration<double>(t1 - t0).count()};
        if (log_sink) log_sink(row);
        else result.log.push_back(row);

        if (sr.terminal) {
            s = env.reset();
            if (t < total_steps) ++result.episodes;
        } else {
            s = sr.next;
        }
    }
    return result;
}

}  // namespace kbsf
