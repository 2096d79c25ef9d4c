#include "kbsf/kbsf.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <ostream>

namespace kbsf {

using nlohmann::json;

RepresentativeSet::RepresentativeSet(std::vector<State> states, KernelSpec kernel)
    : states_(std::move(states)), kernel_(std::move(kernel)) {
    if (states_.empty())
        throw std::invalid_argument("RepresentativeSet: need at least one state");
    kernel_.validate();
    for (std::size_t i = 0; i < states_.size(); ++i)
        for (std::size_t j = i + 1; j < states_.size(); ++j)
            if (states_[i].size() == states_[j].size() && states_[i] == states_[j])
                throw std::invalid_argument("RepresentativeSet: duplicate representative state");
    index_ = NeighborIndex(states_, kernel_.norm_weights);
}

void RepresentativeSet::add_state(const State& s) {
    for (const auto& existing : states_)
        if (existing.size() == s.size() && existing == s)
            throw std::invalid_argument("RepresentativeSet: duplicate representative state");
    states_.push_back(s);
    index_ = NeighborIndex(states_, kernel_.norm_weights);
}

Vec RepresentativeSet::smoothing_row(const State& s, double& raw_mass) const {
    return normalized_row(kernel_, s, states_, &index_, raw_mass);
}

Vec RepresentativeSet::smoothing_row(const State& s) const {
    double ignored;
    return normalized_row(kernel_, s, states_, &index_, ignored);
}

namespace {

// Row-stochastic product with extended-precision accumulation for big blocks.
Mat stochastic_product(const Mat& K, const Mat& D) {
    if (K.cols() != D.rows())
        throw std::invalid_argument("swap_factors: factor dimension mismatch");
    const bool big = static_cast<long long>(K.rows()) * K.cols() * D.cols() > 1'000'000LL;
    if (!big) return K * D;
    Mat out(K.rows(), D.cols());
    for (Eigen::Index i = 0; i < K.rows(); ++i)
        for (Eigen::Index j = 0; j < D.cols(); ++j) {
            long double acc = 0.0L;
            for (Eigen::Index t = 0; t < K.cols(); ++t)
                acc += static_cast<long double>(K(i, t)) * D(t, j);
            out(i, j) = static_cast<double>(acc);
        }
    return out;
}

void renormalize_rows(Mat& P) {
    for (Eigen::Index i = 0; i < P.rows(); ++i) {
        double s = P.row(i).sum();
        if (s > 0.0) P.row(i) /= s;
    }
}

json kernel_to_json(const KernelSpec& k) {
    json j;
    j["phi"] = to_string(k.phi);
    j["tau"] = k.tau;
    j["mu"] = k.mu;
    j["decay_scale"] = k.decay_scale;
    j["decay_ratio"] = k.decay_ratio;
    j["decay_onset"] = k.decay_onset;
    j["norm_weights"] = std::vector<double>(k.norm_weights.begin(), k.norm_weights.end());
    return j;
}

KernelSpec kernel_from_json(const json& j) {
    KernelSpec k;
    k.phi = mother_kernel_from_string(j.at("phi").get<std::string>());
    k.tau = j.at("tau").get<double>();
    k.mu = j.at("mu").get<int>();
    k.decay_scale = j.at("decay_scale").get<double>();
    k.decay_ratio = j.at("decay_ratio").get<double>();
    k.decay_onset = j.at("decay_onset").get<double>();
    auto w = j.at("norm_weights").get<std::vector<double>>();
    k.norm_weights = Eigen::Map<const Vec>(w.data(), static_cast<Eigen::Index>(w.size()));
    return k;
}

std::vector<double> mat_to_rowmajor(const Mat& m) {
    std::vector<double> out;
    out.reserve(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
    return out;
}

Mat mat_from_rowmajor(const std::vector<double>& v, Eigen::Index rows, Eigen::Index cols) {
    if (static_cast<Eigen::Index>(v.size()) != rows * cols)
        throw std::invalid_argument("ReducedModel: serialized matrix size mismatch");
    Mat m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = v[i * cols + j];
    return m;
}

}  // namespace

Factorization build_factorization(const SampleSet& samples, const RepresentativeSet& reps,
                                  const KernelSpec& sample_kernel) {
    if (reps.size() == 0) throw std::invalid_argument("build_factorization: empty representative set");
    sample_kernel.validate();
    const int A = samples.num_actions();
    const int m = reps.size();
    for (int a = 0; a < A; ++a)
        if (samples.count(a) == 0)
            throw std::invalid_argument("build_factorization: action without sample transitions");

    Factorization f;
    f.kdot.resize(A);
    f.ddot.resize(A);
    f.rbar.resize(A);
    f.kmass.resize(A);
    for (int a = 0; a < A; ++a) {
        const auto& trs = samples.transitions(a);
        const auto na = static_cast<Eigen::Index>(trs.size());
        std::vector<State> starts;
        starts.reserve(trs.size());
        Vec ra(na);
        for (Eigen::Index j = 0; j < na; ++j) {
            starts.push_back(trs[j].start);
            ra(j) = trs[j].reward;
        }
        NeighborIndex start_index;
        if (sample_kernel.mu > 0 && sample_kernel.mu < na)
            start_index = NeighborIndex(starts, sample_kernel.norm_weights);
        const NeighborIndex* sidx = start_index.empty() ? nullptr : &start_index;

        Mat kdot(m, na);
        Vec mass(m);
        for (int i = 0; i < m; ++i) {
            double raw = 0.0;
            kdot.row(i) = normalized_row(sample_kernel, reps.state(i), starts, sidx, raw)
                              .transpose();
            mass(i) = raw;
        }
        Mat ddot(na, m);
        for (Eigen::Index i = 0; i < na; ++i)
            ddot.row(i) = reps.smoothing_row(trs[i].end).transpose();

        f.rbar[a] = kdot * ra;
        f.kdot[a] = std::move(kdot);
        f.ddot[a] = std::move(ddot);
        f.kmass[a] = std::move(mass);
    }
    return f;
}

FiniteMDP swap_factors_mdp(const Factorization& f, double gamma) {
    if (f.kdot.empty()) throw std::invalid_argument("swap_factors: empty factorization");
    FiniteMDP mdp;
    mdp.num_states = f.order();
    mdp.gamma = gamma;
    const int A = f.num_actions();
    mdp.P.resize(A);
    mdp.r.resize(A);
    for (int a = 0; a < A; ++a) {
        Mat P = stochastic_product(f.kdot[a], f.ddot[a]);
        renormalize_rows(P);
        mdp.P[a] = std::move(P);
        mdp.r[a] = f.rbar[a];
    }
    mdp.validate();
    return mdp;
}

ReducedModel swap_factors(const Factorization& f, RepresentativeSet reps,
                          KernelSpec sample_kernel, double gamma) {
    ReducedModel model;
    model.mdp = swap_factors_mdp(f, gamma);
    if (model.mdp.num_states != reps.size())
        throw std::invalid_argument("swap_factors: representative count mismatch");
    model.reps = std::move(reps);
    model.sample_kernel = std::move(sample_kernel);
    model.w = f.kmass;
    model.qbar = Mat::Zero(model.mdp.num_states, model.mdp.num_actions());
    return model;
}

std::vector<std::pair<int, int>> ReducedModel::zero_mass_rows() const {
    std::vector<std::pair<int, int>> rows;
    for (int a = 0; a < num_actions(); ++a)
        for (int i = 0; i < num_states(); ++i)
            if (w[a](i) == 0.0) rows.emplace_back(a, i);
    return rows;
}

FiniteMDP ReducedModel::solver_mdp() const {
    FiniteMDP patched = mdp;
    for (int a = 0; a < num_actions(); ++a)
        for (int i = 0; i < num_states(); ++i)
            if (w[a](i) == 0.0) {
                patched.P[a].row(i).setZero();
                patched.P[a](i, i) = 1.0;
                patched.r[a](i) = 0.0;
            }
    return patched;
}

const Mat& ReducedModel::solve(const SolverConfig& config) {
    FiniteMDP m = solver_mdp();
    SolverConfig cfg = config;
    if (solved && !cfg.warm_start) cfg.warm_start = apply_gamma_operator(qbar);
    auto [vf, pi] = modified_policy_iteration(m, cfg);
    (void)pi;
    qbar = std::move(vf.Q);
    solved = true;
    return qbar;
}

KbsfSolution batch_kbsf(const SampleSet& samples, RepresentativeSet reps,
                        const KernelSpec& sample_kernel, double gamma,
                        const SolverConfig& config) {
    Factorization f = build_factorization(samples, reps, sample_kernel);
    ReducedModel model = swap_factors(f, std::move(reps), sample_kernel, gamma);
    model.solve(config);

    // vtilde = Gamma(D Qbar*), assembled block by block from ddot
    Vec vtilde(static_cast<Eigen::Index>(samples.total()));
    const int A = samples.num_actions();
    for (int a = 0; a < A; ++a) {
        Mat dq = f.ddot[a] * model.qbar;  // n_a x |A|
        vtilde.segment(static_cast<Eigen::Index>(samples.offset(a)), dq.rows()) =
            dq.rowwise().maxCoeff();
    }
    return KbsfSolution{std::move(model), std::move(vtilde)};
}

Vec compute_vtilde(const ReducedModel& model, const SampleSet& samples) {
    if (!model.solved) throw std::logic_error("compute_vtilde: model has not been solved");
    Vec vtilde(static_cast<Eigen::Index>(samples.total()));
    Eigen::Index pos = 0;
    for (int a = 0; a < samples.num_actions(); ++a)
        for (const auto& t : samples.transitions(a)) {
            Vec d = model.reps.smoothing_row(t.end);
            vtilde(pos++) = (d.transpose() * model.qbar).maxCoeff();
        }
    return vtilde;
}

double kbsf_q(const KbsfSolution& solution, const SampleSet& samples, const State& s, int a) {
    if (!solution.model.solved) throw std::logic_error("kbsf_q: model has not been solved");
    if (a < 0 || a >= samples.num_actions())
        throw std::invalid_argument("kbsf_q: action index out of range");
    const auto& trs = samples.transitions(a);
    std::vector<State> starts;
    starts.reserve(trs.size());
    for (const auto& t : trs) starts.push_back(t.start);
    Vec kappa = normalized_row(solution.model.sample_kernel, s, starts);
    const double gamma = solution.model.mdp.gamma;
    double q = 0.0;
    for (std::size_t i = 0; i < trs.size(); ++i) {
        double vt = solution.vtilde(static_cast<Eigen::Index>(samples.offset(a) + i));
        q += kappa(static_cast<Eigen::Index>(i)) * (trs[i].reward + gamma * vt);
    }
    return q;
}

Vec nadaraya_watson_row(const std::vector<Vec>& rows, const Vec& weights) {
    if (rows.empty()) throw std::invalid_argument("nadaraya_watson_row: no rows");
    if (weights.size() != static_cast<Eigen::Index>(rows.size()))
        throw std::invalid_argument("nadaraya_watson_row: weight length mismatch");
    Vec out = Vec::Zero(rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != out.size())
            throw std::invalid_argument("nadaraya_watson_row: row length mismatch");
        out += weights(static_cast<Eigen::Index>(i)) * rows[i];
    }
    return out;
}

json ReducedModel::to_json() const {
    json j;
    j["format"] = "kbsf-reduced-model";
    j["version"] = 1;
    j["gamma"] = mdp.gamma;
    j["num_states"] = num_states();
    j["num_actions"] = num_actions();
    json reps_json = json::array();
    for (const auto& s : reps.states())
        reps_json.push_back(std::vector<double>(s.begin(), s.end()));
    j["representative_states"] = reps_json;
    j["rep_kernel"] = kernel_to_json(reps.kernel());
    j["sample_kernel"] = kernel_to_json(sample_kernel);
    json P = json::array(), r = json::array(), wj = json::array();
    for (int a = 0; a < num_actions(); ++a) {
        P.push_back(mat_to_rowmajor(mdp.P[a]));
        r.push_back(std::vector<double>(mdp.r[a].begin(), mdp.r[a].end()));
        wj.push_back(std::vector<double>(w[a].begin(), w[a].end()));
    }
    j["P"] = P;
    j["r"] = r;
    j["w"] = wj;
    j["solved"] = solved;
    if (solved) j["qbar"] = mat_to_rowmajor(qbar);
    return j;
}

ReducedModel ReducedModel::from_json(const json& j) {
    if (j.at("format").get<std::string>() != "kbsf-reduced-model")
        throw std::invalid_argument("ReducedModel: unrecognized format tag");
    if (j.at("version").get<int>() != 1)
        throw std::invalid_argument("ReducedModel: unsupported version");
    const int m = j.at("num_states").get<int>();
    const int A = j.at("num_actions").get<int>();

    std::vector<State> rep_states;
    for (const auto& row : j.at("representative_states")) {
        auto coords = row.get<std::vector<double>>();
        rep_states.push_back(
            Eigen::Map<const Vec>(coords.data(), static_cast<Eigen::Index>(coords.size())));
    }
    if (static_cast<int>(rep_states.size()) != m)
        throw std::invalid_argument("ReducedModel: representative count mismatch");

    ReducedModel model;
    model.reps = RepresentativeSet(std::move(rep_states), kernel_from_json(j.at("rep_kernel")));
    model.sample_kernel = kernel_from_json(j.at("sample_kernel"));
    model.mdp.num_states = m;
    model.mdp.gamma = j.at("gamma").get<double>();
    model.mdp.P.resize(A);
    model.mdp.r.resize(A);
    model.w.resize(A);
    for (int a = 0; a < A; ++a) {
        model.mdp.P[a] = mat_from_rowmajor(j.at("P")[a].get<std::vector<double>>(), m, m);
        auto rv = j.at("r")[a].get<std::vector<double>>();
        auto wv = j.at("w")[a].get<std::vector<double>>();
        model.mdp.r[a] = Eigen::Map<const Vec>(rv.data(), static_cast<Eigen::Index>(rv.size()));
        model.w[a] = Eigen::Map<const Vec>(wv.data(), static_cast<Eigen::Index>(wv.size()));
    }
    model.solved = j.at("solved").get<bool>();
    model.qbar = model.solved ? mat_from_rowmajor(j.at("qbar").get<std::vector<double>>(), m, A)
                              : Mat::Zero(m, A);
    return model;
}

void ReducedModel::save(std::ostream& out) const { out << to_json().dump(2) << '\n'; }

ReducedModel ReducedModel::load(std::istream& in) {
    json j;
    in >> j;
    return from_json(j);
}

}  // namespace kbsf
