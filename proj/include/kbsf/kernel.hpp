#pragma once

#include "kbsf/core.hpp"
#include "kbsf/kdtree.hpp"

#include <limits>
#include <span>
#include <string>

namespace kbsf {

enum class MotherKernel { Exp, Gaussian };

// A similarity kernel k(s, s') = phi(||s - s'|| / tau) built from a
// non-increasing mother function phi. `mu > 0` restricts evaluation to the
// mu nearest points of a query, with the remaining values truncated to zero
// and the surviving mass renormalized.
//
// The decay constants describe the envelope
//   scale * exp(-x) <= phi(x) <= ratio * scale * exp(-x)   for x >= onset,
// used by the tau-bar threshold diagnostics. They default to the exact
// values of the exponential mother kernel.
struct KernelSpec {
    MotherKernel phi = MotherKernel::Exp;
    double tau = 1.0;
    int mu = 0;  // 0 means dense
    double decay_scale = 1.0;   // A
    double decay_ratio = 1.0;   // lambda >= 1
    double decay_onset = 0.0;   // B >= 0
    Vec norm_weights;           // empty = plain Euclidean

    double phi_value(double x) const;
    // log phi(x); normalized rows are computed through it with the usual
    // softmax shift, so narrow widths cannot underflow an entire row
    double log_phi(double x) const;
    double distance(const State& a, const State& b) const;

    // Spot-checks that phi is non-increasing on a grid and that the spec's
    // scalar parameters are admissible. Throws on violation.
    void validate() const;
};

// k_tau(s, s') = phi(||s - s'|| / tau).
double kernel_value(const KernelSpec& spec, const State& s, const State& s2);

// Normalized kernel row over `points`, centered at `center`. With mu > 0
// only the mu nearest points carry mass, all other entries are exactly zero.
// Pass a prebuilt index over the same points to skip the internal scan.
// Throws if every surviving kernel value is zero (isolated query point).
Vec normalized_row(const KernelSpec& spec, const State& center,
                   std::span<const State> points,
                   const NeighborIndex* index = nullptr);

// As normalized_row, but also reports the raw (unnormalized) kernel mass,
// which incremental model updates accumulate.
Vec normalized_row(const KernelSpec& spec, const State& center,
                   std::span<const State> points, const NeighborIndex* index,
                   double& raw_mass);

std::string to_string(MotherKernel k);
MotherKernel mother_kernel_from_string(const std::string& name);

}  // namespace kbsf
