#pragma once

#include "kbsf/environment.hpp"
#include "kbsf/kbsf.hpp"

#include <cstdint>
#include <functional>
#include <random>

namespace kbsf {

struct IncrementalConfig {
    long t_m = 1000;  // model-update interval (steps)
    long t_v = 1000;  // value-update interval (steps)
    double epsilon_greedy = 0.3;
    // Raw kernel value below which an encountered end state spawns a new
    // representative state; 0 disables growth.
    double growth_threshold = 0.0;
    std::size_t max_batch_buffer = 1u << 22;
    SolverConfig solver;

    void validate() const;
};

struct UpdateReport {
    std::size_t transitions_absorbed = 0;
    // rows that received no kernel mass and were left untouched
    std::vector<std::pair<int, int>> zero_mass_rows;
};

// Folds a batch of transitions into the model via the unnormalize/
// renormalize rules; the batch is not retained. Chunked application over a
// partition of a sample set reproduces the single-batch model.
UpdateReport update_model(ReducedModel& model, const SampleSet& batch);

// Grows the model by one state: new row/column zeroed everywhere, zero
// kernel mass, zero qbar row. Existing entries are preserved.
void add_representative_state(ReducedModel& model, const State& s_new);

// Qtilde(s,a) = sum_i kappabar(s, rep_i) qbar(i, a); consults no samples.
double ikbsf_q(const ReducedModel& model, const State& s, int a);

struct EpisodeLogRow {
    long step;
    int episode;
    double reward;
    int action;
    int m;
    bool model_update;
    bool value_update;
    double step_seconds;
};

struct IkbsfRunResult {
    ReducedModel model;
    std::vector<EpisodeLogRow> log;
    std::size_t peak_buffered_transitions = 0;
    long model_updates = 0;
    long value_updates = 0;
    long episodes = 0;
    std::vector<std::pair<long, int>> rep_count_trajectory;  // (step, m)
};

// Optional action-selection override; when absent an epsilon-greedy policy
// over ikbsf_q is used (exact ties resolved uniformly at random).
using ActionCallback =
    std::function<int(const State&, const ReducedModel&, std::mt19937_64&)>;

// Receives each log row as it is produced; when set, rows are streamed
// instead of retained, keeping the run's memory independent of its length.
using LogSink = std::function<void(const EpisodeLogRow&)>;

// The observe/act loop of incremental KBSF: buffer transitions, every t_m
// steps optionally grow the representative set and absorb the buffer, every
// t_v steps refresh qbar with a warm-started solve.
IkbsfRunResult run_ikbsf(Environment& env, RepresentativeSet reps_initial,
                         const KernelSpec& sample_kernel, const IncrementalConfig& config,
                         long total_steps, std::uint64_t seed,
                         const ActionCallback& act = {}, const LogSink& log_sink = {});

}  // namespace kbsf
