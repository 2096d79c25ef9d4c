#include "kbsf/kernel.hpp"

#include <algorithm>
#include <cmath>

namespace kbsf {

double KernelSpec::phi_value(double x) const {
    switch (phi) {
        case MotherKernel::Exp: return std::exp(-x);
        case MotherKernel::Gaussian: return std::exp(-x * x);
    }
    throw std::logic_error("KernelSpec: unknown mother kernel");
}

double KernelSpec::log_phi(double x) const {
    switch (phi) {
        case MotherKernel::Exp: return -x;
        case MotherKernel::Gaussian: return -x * x;
    }
    throw std::logic_error("KernelSpec: unknown mother kernel");
}

double KernelSpec::distance(const State& a, const State& b) const {
    if (a.size() != b.size())
        throw std::invalid_argument("KernelSpec: state dimension mismatch");
    if (norm_weights.size() == 0) return (a - b).norm();
    if (norm_weights.size() != a.size())
        throw std::invalid_argument("KernelSpec: norm weight dimension mismatch");
    return ((a - b).cwiseProduct(norm_weights)).norm();
}

void KernelSpec::validate() const {
    if (!(tau > 0.0)) throw std::invalid_argument("KernelSpec: tau must be positive");
    if (mu < 0) throw std::invalid_argument("KernelSpec: mu must be nonnegative");
    if (!(decay_scale > 0.0) || decay_ratio < 1.0 || decay_onset < 0.0)
        throw std::invalid_argument("KernelSpec: inadmissible decay constants");
    double prev = phi_value(0.0);
    for (int i = 1; i <= 64; ++i) {
        double cur = phi_value(i * 0.25);
        if (cur > prev + 1e-15)
            throw std::invalid_argument("KernelSpec: mother kernel is not non-increasing");
        prev = cur;
    }
}

double kernel_value(const KernelSpec& spec, const State& s, const State& s2) {
    if (!(spec.tau > 0.0)) throw std::invalid_argument("kernel_value: tau must be positive");
    return spec.phi_value(spec.distance(s, s2) / spec.tau);
}

namespace {

// divide by the sum, then correct the residual once so row sums land
// within 1e-12 even for long rows
void normalize_in_place(Vec& row) {
    double s = row.sum();
    if (!(s > 0.0))
        throw std::runtime_error("normalized_row: all kernel values are zero (isolated query point)");
    row /= s;
    double s2 = row.sum();
    if (s2 > 0.0 && s2 != 1.0) row /= s2;
}

}  // namespace

Vec normalized_row(const KernelSpec& spec, const State& center,
                   std::span<const State> points, const NeighborIndex* index,
                   double& raw_mass) {
    if (points.empty())
        throw std::invalid_argument("normalized_row: empty point set");
    const auto n = static_cast<Eigen::Index>(points.size());
    Vec row = Vec::Zero(n);

    std::vector<std::pair<int, double>> entries;  // (index, distance)
    if (spec.mu > 0 && spec.mu < n) {
        if (index != nullptr) {
            if (index->size() != points.size())
                throw std::invalid_argument("normalized_row: index size mismatch");
            for (const auto& h : index->nearest(center, spec.mu))
                entries.emplace_back(h.index, h.distance);
        } else {
            std::vector<std::pair<double, int>> all(n);
            for (Eigen::Index i = 0; i < n; ++i)
                all[i] = {spec.distance(center, points[i]), static_cast<int>(i)};
            std::partial_sort(all.begin(), all.begin() + spec.mu, all.end());
            for (int i = 0; i < spec.mu; ++i)
                entries.emplace_back(all[i].second, all[i].first);
        }
    } else {
        entries.reserve(n);
        for (Eigen::Index i = 0; i < n; ++i)
            entries.emplace_back(static_cast<int>(i), spec.distance(center, points[i]));
    }

    // softmax shift: weights relative to the nearest surviving point, so the
    // row stays well defined however narrow the kernel is
    double best = std::numeric_limits<double>::infinity();
    for (const auto& [i, d] : entries) best = std::min(best, d);
    const double log_peak = spec.log_phi(best / spec.tau);
    long double mass = 0.0L;
    for (const auto& [i, d] : entries) {
        double v = std::exp(spec.log_phi(d / spec.tau) - log_peak);
        row(i) = v;
        mass += v;
    }
    raw_mass = static_cast<double>(std::exp(log_peak) * mass);

    normalize_in_place(row);
    return row;
}

Vec normalized_row(const KernelSpec& spec, const State& center,
                   std::span<const State> points, const NeighborIndex* index) {
    double ignored = 0.0;
    return normalized_row(spec, center, points, index, ignored);
}

std::string to_string(MotherKernel k) {
    return k == MotherKernel::Exp ? "exp" : "gaussian";
}

MotherKernel mother_kernel_from_string(const std::string& name) {
    if (name == "exp") return MotherKernel::Exp;
    if (name == "gaussian") return MotherKernel::Gaussian;
    throw std::invalid_argument("unknown mother kernel: " + name);
}

}  // namespace kbsf
