#pragma once

#include "kbsf/core.hpp"
#include "kbsf/ikbsf.hpp"

#include <iosfwd>
#include <string>

namespace kbsf {

// Sample-set CSV: one row per transition, header required, columns
//   action, s_1..s_d, reward, snext_1..snext_d
// Values are written with enough digits to round-trip exactly.
void save_samples_csv(const SampleSet& samples, std::ostream& out);
SampleSet load_samples_csv(std::istream& in, int num_actions = -1,
                           double reward_cap = kDefaultRewardCap);

void save_samples_csv_file(const SampleSet& samples, const std::string& path);
SampleSet load_samples_csv_file(const std::string& path, int num_actions = -1,
                                double reward_cap = kDefaultRewardCap);

// Episode log CSV: step, episode, reward, action, m, model-update flag,
// value-update flag, seconds per step.
void write_episode_log_header(std::ostream& out);
void write_episode_log_row(std::ostream& out, const EpisodeLogRow& row);

}  // namespace kbsf
