#pragma once

#include <functional>
#include <utility>
#include <vector>

namespace dsmp {

// Signed regular measure on a closed interval [a, b]: finitely many atoms
// plus an absolutely continuous part. The density is piecewise linear on
// stored node grids, which keeps boxes (mollified atoms), uniform and linear
// densities exactly representable; quadrature against it is trapezoidal on
// the stored nodes.
struct Atom {
    double location = 0.0;
    double mass = 0.0;
};

struct DensitySegment {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> values;  // >= 2 samples on uniform nodes over [lo, hi]
};

struct RegularMeasure {
    double a = 0.0;
    double b = 0.0;
    std::vector<Atom> atoms;               // strictly increasing locations
    std::vector<DensitySegment> density;

    bool has_atoms() const { return !atoms.empty(); }
    bool has_density() const { return !density.empty(); }

    /// Throws std::invalid_argument on a malformed representation.
    void validate() const;

    // Quadrature decomposition: calls fn(location, signed_weight) for every
    // atom and every density node. integrate() below and all measure-driven
    // terms in the solvers are built on this.
    template <typename Fn>
    void for_each_quadrature(Fn&& fn) const {
        for (const Atom& at : atoms) fn(at.location, at.mass);
        for (const DensitySegment& seg : density) {
            const int m = static_cast<int>(seg.values.size());
            if (m < 2) continue;
            const double h = (seg.hi - seg.lo) / (m - 1);
            for (int j = 0; j < m; ++j) {
                const double tw = (j == 0 || j == m - 1) ? 0.5 * h : h;
                fn(seg.lo + j * h, tw * seg.values[j]);
            }
        }
    }
};

/// |mu|([a,b]) = sum of |atom masses| + integral of |density| (exact on the
/// piecewise-linear representation, sign changes split analytically).
double total_variation(const RegularMeasure& mu);

/// Integral of phi against mu: exact on atoms, trapezoidal on the density.
double integrate(const RegularMeasure& mu, const std::function<double(double)>& phi);

/// mu([a,b]), i.e. integrate against 1.
double mass(const RegularMeasure& mu);

/// Jordan decomposition (mu_plus, mu_minus), both nonnegative measures with
/// mu = mu_plus - mu_minus and |mu| = mu_plus + mu_minus.
std::pair<RegularMeasure, RegularMeasure> jordan_decomposition(const RegularMeasure& mu);

/// Splits off the atom at the right endpoint T = mu.b: returns (bar_mu, mass)
/// with bar_mu({T}) = 0 and bar_mu + mass * delta_T == mu.
std::pair<RegularMeasure, double> split_endpoint(const RegularMeasure& mu, double T);

// Weak-* approximation of the Lemma: every atom (x_k, m_k) becomes the box
// density m_k / eps on [x_k, x_k + eps], eps = min(m_gap/2, (b-a)/n) with
// m_gap the smallest gap between consecutive atoms. An atom too close to the
// right endpoint gets its eps shrunk to stay inside the support. Requires no
// atom at the right endpoint (apply split_endpoint first).
RegularMeasure mollify_approximation(const RegularMeasure& bar_mu, int n);

/// The eps used by mollify_approximation at index n (before per-atom shrink).
double mollifier_width(const RegularMeasure& bar_mu, int n);

/// max over tests of |integrate(mu, phi) - integrate(approx, phi)|.
double weak_star_error(const RegularMeasure& mu, const RegularMeasure& approx,
                       const std::vector<std::function<double(double)>>& tests);

// Constructors for the measure families used in configs and tests.
RegularMeasure dirac_measure(double a, double b, double location, double m = 1.0);
RegularMeasure atomic_measure(double a, double b, std::vector<Atom> atoms);
RegularMeasure uniform_density_measure(double a, double b, double total_mass, int nodes = 2);
RegularMeasure linear_density_measure(double a, double b, double value_lo, double value_hi,
                                      int nodes = 2);
/// Truncation of sum_i 2^{-i} delta_{b - (b-a)/i}; tail mass is 2^{-terms}.
RegularMeasure truncated_geometric_measure(double a, double b, int terms);
double geometric_tail_mass(int terms);

/// Merge the atoms and density of two measures on the same support.
RegularMeasure measure_sum(const RegularMeasure& x, const RegularMeasure& y);

}  // namespace dsmp
