#include "cascade/spaces.hpp"

#include <cmath>
#include <random>

namespace cascade {

double WeightedSpace::weight(ModeIndex mode) const {
    switch (kind) {
        case Kind::V0:
        case Kind::V: {
            if (s == 0.0 || a == b)
                throw SpaceCollapse("weighted space collapses when s = 0 or a = b");
            double w = 1.0;
            if (mode.branch == Branch::B1) {
                const double n = mode.k;
                const double gap = s * (a - b);
                w += n * n * n * n / (gap * gap);
            }
            if (kind == Kind::V) {
                const double rate = mode.branch == Branch::B1
                                        ? (mode.k + 0.5) * (mode.k + 0.5) * kPiSq
                                        : static_cast<double>(mode.k) * mode.k * kPiSq;
                w *= std::exp(2.0 * T * rate);
            }
            return w;
        }
        case Kind::W: {
            const auto& ws = mode.branch == Branch::B1 ? w_b1 : w_b2;
            if (mode.k >= static_cast<int>(ws.size()))
                throw DimensionError("WeightedSpace: mode beyond tabulated W weights");
            return ws[mode.k];
        }
    }
    return 1.0;
}

WeightedSpace weighted_space_v0(double a, double b, double s) {
    WeightedSpace w;
    w.kind = WeightedSpace::Kind::V0;
    w.a = a;
    w.b = b;
    w.s = s;
    return w;
}

WeightedSpace weighted_space_v(double a, double b, double s, double T) {
    WeightedSpace w = weighted_space_v0(a, b, s);
    w.kind = WeightedSpace::Kind::V;
    w.T = T;
    return w;
}

WeightedSpace weighted_space_w(const MeasurementSpec& meas, const SpectralBasis& basis,
                               int nmax, int mmax) {
    WeightedSpace w;
    w.kind = WeightedSpace::Kind::W;
    for (int n = 0; n <= nmax; ++n) {
        const double c = output_coefficient(meas, {Branch::B1, n}, basis);
        w.w_b1.push_back(c * c);
    }
    for (int m = 0; m <= mmax; ++m) {
        const double c = output_coefficient(meas, {Branch::B2, m}, basis);
        w.w_b2.push_back(c * c);
    }
    return w;
}

double weighted_norm(const std::vector<double>& b1, const std::vector<double>& b2,
                     const WeightedSpace& space) {
    double acc = 0.0;
    for (std::size_t n = 0; n < b1.size(); ++n)
        acc += space.weight({Branch::B1, static_cast<int>(n)}) * b1[n] * b1[n];
    for (std::size_t m = 0; m < b2.size(); ++m)
        acc += space.weight({Branch::B2, static_cast<int>(m)}) * b2[m] * b2[m];
    return acc;
}

namespace {

// One dual-flow coefficient: under X' = A* X, the Psi-expansion coefficients
// obey c_{1,n}(t) = e^{lt} c_{1,n}(0) and, on a Delta pair (n,m),
// c_{2,m}(t) = e^{lt} (c_{2,m}(0) - sqrt2 s mu_m t c_{1,n}(0)).
struct DualTerm {
    double lambda = 0.0;
    double trace0 = 0.0;    // psi^2(0) of the mode itself
    double coupling = 0.0;  // -sqrt2 s mu_m  (B1 Jordan rows only)
    double partner_trace0 = 0.0;
    int partner_b2 = -1;    // partner B2 index, or -1
    double vweight = 1.0;   // V0' weight of the mode's own coefficient
};

}  // namespace

double observability_ratio_probe(const SpectralBasis& basis, double T,
                                 const std::vector<ModeIndex>& mode_subset, int draws,
                                 std::uint64_t seed) {
    const CascadeConfig& cfg = basis.config();
    if (!(T > 0.0)) throw std::invalid_argument("observability_ratio_probe: T must be > 0");
    if (mode_subset.empty())
        throw std::invalid_argument("observability_ratio_probe: empty mode subset");
    {
        const int kmax =
            cfg.a == cfg.b ? 0 : static_cast<int>(std::ceil(std::abs(cfg.b - cfg.a) / kPiSq)) + 1;
        const auto sets = resonance_sets(cfg, kmax);
        if (cfg.a == cfg.b || !sets.theta.empty())
            throw ThetaNonEmpty("observability_ratio_probe: Theta(a,b) is nonempty");
    }

    const auto& res = basis.resonance();
    const WeightedSpace v0 = weighted_space_v0(cfg.a, cfg.b, cfg.s);
    std::vector<DualTerm> terms;
    double max_rate = 1.0;
    for (const ModeIndex& mode : mode_subset) {
        DualTerm t;
        t.lambda = basis.eigenvalue(mode);
        max_rate = std::max(max_rate, std::abs(t.lambda));
        t.trace0 = basis.psi(mode).eval(0.0).v2;
        if (mode.branch == Branch::B1) {
            if (auto m = res.partner_of_b1(mode.k)) {
                t.coupling = -std::sqrt(2.0) * cfg.s * mu(*m);
                t.partner_trace0 = basis.psi({Branch::B2, *m}).eval(0.0).v2;
                t.partner_b2 = *m;
            }
            t.vweight = 1.0 / v0.weight(mode);
        }
        terms.push_back(t);
    }

    // time quadrature resolved against the fastest decay scale
    const int panels = std::max(64, static_cast<int>(std::ceil(T * max_rate / 2.0)));
    QuadratureGrid grid(panels);
    const Eigen::Index nodes = static_cast<Eigen::Index>(grid.x.size());

    // per-term trace profile e^{lt}(trace0 + coupling t partner_trace0)
    Eigen::MatrixXd profile(terms.size(), nodes);
    for (std::size_t i = 0; i < terms.size(); ++i)
        for (Eigen::Index q = 0; q < nodes; ++q) {
            const double t = T * grid.x[q];
            profile(static_cast<Eigen::Index>(i), q) =
                std::exp(terms[i].lambda * t) *
                (terms[i].trace0 + terms[i].coupling * t * terms[i].partner_trace0);
        }

    double min_ratio = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> c(mode_subset.size());
    Eigen::VectorXd trace(nodes);
    for (int d = 0; d < draws; ++d) {
        for (double& v : c) v = normal(rng);
        trace.setZero();
        // evaluate every prefix of the subset: the candidate pool of a subset
        // is then contained in that of its supersets, so the reported minimum
        // cannot increase when the subset grows
        std::vector<std::pair<int, double>> b2_at_T;  // (B2 index, coefficient at T)
        double den_b1 = 0.0;
        for (std::size_t len = 1; len <= c.size(); ++len) {
            const std::size_t i = len - 1;
            trace += c[i] * profile.row(static_cast<Eigen::Index>(i)).transpose();
            const double cT = c[i] * std::exp(terms[i].lambda * T);
            if (mode_subset[i].branch == Branch::B1) {
                den_b1 += terms[i].vweight * cT * cT;
                if (terms[i].partner_b2 >= 0)
                    b2_at_T.emplace_back(terms[i].partner_b2,
                                         c[i] * std::exp(terms[i].lambda * T) *
                                             terms[i].coupling * T);
            } else {
                b2_at_T.emplace_back(mode_subset[i].k, cT);
            }
            double num = 0.0;
            for (Eigen::Index q = 0; q < nodes; ++q)
                num += T * grid.w[q] * trace(q) * trace(q);
            // collapse duplicate B2 indices (a pair member plus its secular feed)
            double den = den_b1;
            for (std::size_t p = 0; p < b2_at_T.size(); ++p) {
                double total = 0.0;
                bool first = true;
                for (std::size_t r = 0; r < p; ++r)
                    if (b2_at_T[r].first == b2_at_T[p].first) first = false;
                if (!first) continue;
                for (std::size_t r = p; r < b2_at_T.size(); ++r)
                    if (b2_at_T[r].first == b2_at_T[p].first) total += b2_at_T[r].second;
                den += total * total;
            }
            if (den <= 0.0) continue;
            min_ratio = std::min(min_ratio, num / den);
        }
    }
    return min_ratio;
}

}  // namespace cascade
