#include "dsmp/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace dsmp {

namespace {
constexpr double kLocTol = 1e-12;

double span_tol(const RegularMeasure& mu) {
    return kLocTol * std::max({1.0, std::abs(mu.a), std::abs(mu.b)});
}

// Exact integral of |linear interpolant| over one interval.
double abs_linear_integral(double h, double v0, double v1) {
    if (v0 == 0.0 && v1 == 0.0) return 0.0;
    if (v0 * v1 >= 0.0) return 0.5 * h * (std::abs(v0) + std::abs(v1));
    // sign change at tau = h*v0/(v0-v1)
    return 0.5 * h * (v0 * v0 + v1 * v1) / std::abs(v0 - v1);
}
}  // namespace

void RegularMeasure::validate() const {
    if (!(b > a)) throw std::invalid_argument("measure support [a,b] must have a < b");
    const double tol = span_tol(*this);
    double prev = -std::numeric_limits<double>::infinity();
    for (const Atom& at : atoms) {
        if (!std::isfinite(at.location) || !std::isfinite(at.mass))
            throw std::invalid_argument("measure atom has non-finite entries");
        if (at.location < a - tol || at.location > b + tol)
            throw std::invalid_argument("measure atom outside support");
        if (at.location <= prev)
            throw std::invalid_argument("measure atoms must have strictly increasing locations");
        prev = at.location;
    }
    for (const DensitySegment& seg : density) {
        if (seg.values.size() < 2)
            throw std::invalid_argument("density segment needs at least two samples");
        if (!(seg.hi > seg.lo))
            throw std::invalid_argument("density segment must have lo < hi");
        if (seg.lo < a - tol || seg.hi > b + tol)
            throw std::invalid_argument("density segment outside support");
        for (double v : seg.values)
            if (!std::isfinite(v)) throw std::invalid_argument("density sample not finite");
    }
}

double total_variation(const RegularMeasure& mu) {
    double tv = 0.0;
    for (const Atom& at : mu.atoms) tv += std::abs(at.mass);
    for (const DensitySegment& seg : mu.density) {
        const int m = static_cast<int>(seg.values.size());
        const double h = (seg.hi - seg.lo) / (m - 1);
        for (int j = 0; j + 1 < m; ++j) tv += abs_linear_integral(h, seg.values[j], seg.values[j + 1]);
    }
    return tv;
}

double integrate(const RegularMeasure& mu, const std::function<double(double)>& phi) {
    double acc = 0.0;
    mu.for_each_quadrature([&](double loc, double w) { acc += w * phi(loc); });
    return acc;
}

double mass(const RegularMeasure& mu) {
    double acc = 0.0;
    mu.for_each_quadrature([&](double, double w) { acc += w; });
    return acc;
}

std::pair<RegularMeasure, RegularMeasure> jordan_decomposition(const RegularMeasure& mu) {
    RegularMeasure plus, minus;
    plus.a = minus.a = mu.a;
    plus.b = minus.b = mu.b;
    for (const Atom& at : mu.atoms) {
        if (at.mass >= 0.0)
            plus.atoms.push_back(at);
        else
            minus.atoms.push_back({at.location, -at.mass});
    }
    for (const DensitySegment& seg : mu.density) {
        const int m = static_cast<int>(seg.values.size());
        const double h = (seg.hi - seg.lo) / (m - 1);
        // Split every linear piece at its sign change so max(w,0) stays
        // exactly piecewise linear.
        std::vector<double> nodes;
        std::vector<double> vals;
        nodes.push_back(seg.lo);
        vals.push_back(seg.values[0]);
        for (int j = 0; j + 1 < m; ++j) {
            const double v0 = seg.values[j], v1 = seg.values[j + 1];
            if (v0 * v1 < 0.0) {
                const double tau = h * v0 / (v0 - v1);
                nodes.push_back(seg.lo + j * h + tau);
                vals.push_back(0.0);
            }
            nodes.push_back(seg.lo + (j + 1) * h);
            vals.push_back(v1);
        }
        for (size_t j = 0; j + 1 < nodes.size(); ++j) {
            if (nodes[j + 1] <= nodes[j]) continue;
            DensitySegment piece{nodes[j], nodes[j + 1],
                                 {std::max(vals[j], 0.0), std::max(vals[j + 1], 0.0)}};
            if (piece.values[0] != 0.0 || piece.values[1] != 0.0) plus.density.push_back(piece);
            DensitySegment neg{nodes[j], nodes[j + 1],
                               {std::max(-vals[j], 0.0), std::max(-vals[j + 1], 0.0)}};
            if (neg.values[0] != 0.0 || neg.values[1] != 0.0) minus.density.push_back(neg);
        }
    }
    return {plus, minus};
}

std::pair<RegularMeasure, double> split_endpoint(const RegularMeasure& mu, double T) {
    if (std::abs(mu.b - T) > span_tol(mu))
        throw std::invalid_argument("split_endpoint: support right endpoint differs from T");
    RegularMeasure bar = mu;
    double atom_mass = 0.0;
    bar.atoms.clear();
    for (const Atom& at : mu.atoms) {
        if (std::abs(at.location - T) <= span_tol(mu))
            atom_mass += at.mass;
        else
            bar.atoms.push_back(at);
    }
    return {bar, atom_mass};
}

double mollifier_width(const RegularMeasure& bar_mu, int n) {
    if (n < 1) throw std::invalid_argument("mollify_approximation index n must be >= 1");
    double m_gap = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k + 1 < bar_mu.atoms.size(); ++k)
        m_gap = std::min(m_gap, bar_mu.atoms[k + 1].location - bar_mu.atoms[k].location);
    return std::min(0.5 * m_gap, (bar_mu.b - bar_mu.a) / n);
}

RegularMeasure mollify_approximation(const RegularMeasure& bar_mu, int n) {
    bar_mu.validate();
    if (!bar_mu.atoms.empty() &&
        std::abs(bar_mu.atoms.back().location - bar_mu.b) <= span_tol(bar_mu))
        throw std::invalid_argument("mollify_approximation: atom at the right endpoint; "
                                    "apply split_endpoint first");
    RegularMeasure out;
    out.a = bar_mu.a;
    out.b = bar_mu.b;
    out.density = bar_mu.density;
    if (bar_mu.atoms.empty()) return out;

    const double eps_n = mollifier_width(bar_mu, n);
    for (const Atom& at : bar_mu.atoms) {
        const double room = bar_mu.b - at.location;
        if (!(room > 0.0))
            throw std::invalid_argument("mollify_approximation: no room right of atom");
        const double eps = std::min(eps_n, room);   // shrink near the right endpoint
        const double height = at.mass / eps;
        out.density.push_back({at.location, at.location + eps, {height, height}});
    }
    return out;
}

double weak_star_error(const RegularMeasure& mu, const RegularMeasure& approx,
                       const std::vector<std::function<double(double)>>& tests) {
    if (std::abs(mu.a - approx.a) > span_tol(mu) || std::abs(mu.b - approx.b) > span_tol(mu))
        throw std::invalid_argument("weak_star_error: measures on different supports");
    double worst = 0.0;
    for (const auto& phi : tests)
        worst = std::max(worst, std::abs(integrate(mu, phi) - integrate(approx, phi)));
    return worst;
}

RegularMeasure dirac_measure(double a, double b, double location, double m) {
    RegularMeasure mu;
    mu.a = a;
    mu.b = b;
    mu.atoms.push_back({location, m});
    mu.validate();
    return mu;
}

RegularMeasure atomic_measure(double a, double b, std::vector<Atom> atoms) {
    RegularMeasure mu;
    mu.a = a;
    mu.b = b;
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& x, const Atom& y) { return x.location < y.location; });
    mu.atoms = std::move(atoms);
    mu.validate();
    return mu;
}

RegularMeasure uniform_density_measure(double a, double b, double total_mass, int nodes) {
    RegularMeasure mu;
    mu.a = a;
    mu.b = b;
    const double h = total_mass / (b - a);
    mu.density.push_back({a, b, std::vector<double>(std::max(nodes, 2), h)});
    mu.validate();
    return mu;
}

RegularMeasure linear_density_measure(double a, double b, double value_lo, double value_hi,
                                      int nodes) {
    RegularMeasure mu;
    mu.a = a;
    mu.b = b;
    const int m = std::max(nodes, 2);
    std::vector<double> v(m);
    for (int j = 0; j < m; ++j) {
        const double s = static_cast<double>(j) / (m - 1);
        v[j] = value_lo + s * (value_hi - value_lo);
    }
    mu.density.push_back({a, b, std::move(v)});
    mu.validate();
    return mu;
}

RegularMeasure truncated_geometric_measure(double a, double b, int terms) {
    if (terms < 1) throw std::invalid_argument("truncated_geometric: terms must be >= 1");
    RegularMeasure mu;
    mu.a = a;
    mu.b = b;
    for (int i = 1; i <= terms; ++i)
        mu.atoms.push_back({b - (b - a) / i, std::pow(2.0, -i)});
    mu.validate();
    return mu;
}

double geometric_tail_mass(int terms) { return std::pow(2.0, -terms); }

RegularMeasure measure_sum(const RegularMeasure& x, const RegularMeasure& y) {
    if (std::abs(x.a - y.a) > span_tol(x) || std::abs(x.b - y.b) > span_tol(x))
        throw std::invalid_argument("measure_sum: supports differ");
    RegularMeasure out = x;
    std::vector<Atom> atoms = x.atoms;
    atoms.insert(atoms.end(), y.atoms.begin(), y.atoms.end());
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& p, const Atom& q) { return p.location < q.location; });
    out.atoms = std::move(atoms);
    out.density.insert(out.density.end(), y.density.begin(), y.density.end());
    out.validate();
    return out;
}

}  // namespace dsmp
