#include "kbsf/csvio.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace kbsf {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& s, const char* what) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error(std::string("sample CSV: bad ") + what + " field: " + s);
    }
}

}  // namespace

void save_samples_csv(const SampleSet& samples, std::ostream& out) {
    const int d = samples.dim();
    out << "action";
    for (int i = 1; i <= d; ++i) out << ",s_" << i;
    out << ",reward";
    for (int i = 1; i <= d; ++i) out << ",snext_" << i;
    out << '\n';
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (int a = 0; a < samples.num_actions(); ++a)
        for (const auto& t : samples.transitions(a)) {
            out << a;
            for (int i = 0; i < d; ++i) out << ',' << t.start(i);
            out << ',' << t.reward;
            for (int i = 0; i < d; ++i) out << ',' << t.end(i);
            out << '\n';
        }
}

SampleSet load_samples_csv(std::istream& in, int num_actions, double reward_cap) {
    std::string line;
    if (!std::getline(in, line))
        throw std::runtime_error("sample CSV: missing header line");
    auto header = split_csv_line(line);
    if (header.size() < 4 || header[0] != "action")
        throw std::runtime_error("sample CSV: malformed header");
    const int d = static_cast<int>((header.size() - 2) / 2);
    if (header.size() != static_cast<std::size_t>(2 * d + 2) ||
        header[1] != "s_1" || header[static_cast<std::size_t>(d) + 1] != "reward")
        throw std::runtime_error("sample CSV: malformed header");

    std::vector<Transition> rows;
    int max_action = -1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (fields.size() != static_cast<std::size_t>(2 * d + 2))
            throw std::runtime_error("sample CSV: wrong field count in row");
        Transition t;
        t.action = static_cast<int>(parse_double(fields[0], "action"));
        t.start = State(d);
        t.end = State(d);
        for (int i = 0; i < d; ++i) t.start(i) = parse_double(fields[1 + i], "state");
        t.reward = parse_double(fields[1 + d], "reward");
        for (int i = 0; i < d; ++i) t.end(i) = parse_double(fields[2 + d + i], "state");
        max_action = std::max(max_action, t.action);
        rows.push_back(std::move(t));
    }
    if (rows.empty()) throw std::runtime_error("sample CSV: no transitions");
    int actions = num_actions > 0 ? num_actions : max_action + 1;
    SampleSet samples(actions, reward_cap);
    for (auto& t : rows) samples.add(std::move(t));
    return samples;
}

void save_samples_csv_file(const SampleSet& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    save_samples_csv(samples, out);
}

SampleSet load_samples_csv_file(const std::string& path, int num_actions, double reward_cap) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    return load_samples_csv(in, num_actions, reward_cap);
}

void write_episode_log_header(std::ostream& out) {
    out << "step,episode,reward,action,m,model_update,value_update,step_seconds\n";
}

void write_episode_log_row(std::ostream& out, const EpisodeLogRow& row) {
    out << row.step << ',' << row.episode << ',' << std::setprecision(17) << row.reward
        << ',' << row.action << ',' << row.m << ',' << (row.model_update ? 1 : 0) << ','
        << (row.value_update ? 1 : 0) << ',' << std::setprecision(6) << row.step_seconds
        << '\n';
}

}  // namespace kbsf
