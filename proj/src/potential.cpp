#include "nlch/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace nlch {

namespace {

std::string fmt_s(double s) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", s);
    return buf;
}

} // namespace

void validate(const PotentialParams& p) {
    if (!(p.theta > 0.0) || !std::isfinite(p.theta))
        throw ValidationError("potential: theta must be positive, got " + fmt_s(p.theta));
    if (!(p.eps0 > 0.0 && p.eps0 < 1.0))
        throw ValidationError("potential: eps0 must lie in (0, 1), got " + fmt_s(p.eps0));
    if (!(p.eps1 > 0.0 && p.eps1 < 0.5))
        throw ValidationError("potential: eps1 must lie in (0, 1/2), got " + fmt_s(p.eps1));
    if (!(p.c_f >= 1.0))
        throw ValidationError("potential: c_f must be >= 1, got " + fmt_s(p.c_f));
}

double flory_huggins_c_f(double theta) {
    return std::max(1.0, 4.0 / theta);
}

double eval_F(double s, const PotentialParams& p) {
    if (std::fabs(s) > 1.0 || !std::isfinite(s))
        throw ValidationError("potential: F is defined on [-1, 1], got s=" + fmt_s(s));
    if (s == 1.0 || s == -1.0) return p.theta * std::log(2.0);
    // log1p keeps the entropy terms accurate as s approaches the endpoints
    return 0.5 * p.theta * ((1.0 + s) * std::log1p(s) + (1.0 - s) * std::log1p(-s));
}

double eval_dF(double s, const PotentialParams& p) {
    if (!(std::fabs(s) < 1.0))
        throw ValidationError("potential: F' requires |s| < 1, got s=" + fmt_s(s));
    return 0.5 * p.theta * (std::log1p(s) - std::log1p(-s));
}

double eval_ddF(double s, const PotentialParams& p) {
    if (!(std::fabs(s) < 1.0))
        throw ValidationError("potential: F'' requires |s| < 1, got s=" + fmt_s(s));
    return p.theta / ((1.0 - s) * (1.0 + s));
}

double eval_dddF(double s, const PotentialParams& p) {
    if (!(std::fabs(s) < 1.0))
        throw ValidationError("potential: F''' requires |s| < 1, got s=" + fmt_s(s));
    const double w = (1.0 - s) * (1.0 + s);
    return 2.0 * p.theta * s / (w * w);
}

namespace {

// one-sided endpoint slope for the interpolant, limited so the first
// interval stays monotone (Fritsch-Carlson endpoint rule)
double edge_slope(double h0, double h1, double d0, double d1) {
    double m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if (m * d0 <= 0.0) return 0.0;
    if (d0 * d1 < 0.0 && std::fabs(m) > 3.0 * std::fabs(d0)) return 3.0 * d0;
    return m;
}

} // namespace

Pchip::Pchip(std::vector<double> nodes, std::vector<double> values)
    : x(std::move(nodes)), y(std::move(values)) {
    const size_t n = x.size();
    if (n < 2 || y.size() != n)
        throw ValidationError("pchip: need at least 2 nodes and matching value count");
    for (size_t i = 0; i + 1 < n; ++i)
        if (!(x[i] < x[i + 1]))
            throw ValidationError("pchip: nodes must be strictly increasing");

    std::vector<double> h(n - 1), d(n - 1);
    for (size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        d[i] = (y[i + 1] - y[i]) / h[i];
    }
    m.assign(n, 0.0);
    if (n == 2) {
        m[0] = m[1] = d[0];
        return;
    }
    for (size_t i = 1; i + 1 < n; ++i) {
        if (d[i - 1] * d[i] <= 0.0) {
            m[i] = 0.0;
        } else {
            // weighted harmonic mean of the neighbouring secants
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
        }
    }
    m[0] = edge_slope(h[0], h[1], d[0], d[1]);
    m[n - 1] = edge_slope(h[n - 2], h[n - 3], d[n - 2], d[n - 3]);
}

double Pchip::operator()(double s) const {
    if (!(s >= x.front() && s <= x.back()))
        throw ValidationError("pchip: query " + fmt_s(s) + " outside node range [" +
                              fmt_s(x.front()) + ", " + fmt_s(x.back()) + "]");
    size_t i = size_t(std::upper_bound(x.begin(), x.end(), s) - x.begin());
    i = std::min(std::max<size_t>(i, 1), x.size() - 1) - 1;
    const double h = x[i + 1] - x[i];
    const double t = (s - x[i]) / h;
    const double u = 1.0 - t;
    const double h00 = (1.0 + 2.0 * t) * u * u;
    const double h10 = t * u * u;
    const double h01 = t * t * (3.0 - 2.0 * t);
    const double h11 = t * t * (t - 1.0);
    return h00 * y[i] + h10 * h * m[i] + h01 * y[i + 1] + h11 * h * m[i + 1];
}

Potential Potential::flory_huggins(PotentialParams p) {
    validate(p);
    Potential pot;
    pot.kind_ = PotentialKind::flory_huggins;
    pot.params_ = p;
    return pot;
}

Potential Potential::quadratic(double theta) {
    PotentialParams p;
    p.theta = theta;
    p.c_f = 1.0;
    validate(p);
    Potential pot;
    pot.kind_ = PotentialKind::quadratic;
    pot.params_ = p;
    return pot;
}

Potential Potential::tabulated(std::vector<double> nodes, std::vector<double> f_values,
                               std::vector<double> df_values, std::vector<double> ddf_values,
                               PotentialParams p) {
    validate(p);
    Potential pot;
    pot.kind_ = PotentialKind::tabulated;
    pot.params_ = p;
    pot.tab_f_ = Pchip(nodes, std::move(f_values));
    pot.tab_df_ = Pchip(nodes, std::move(df_values));
    pot.tab_ddf_ = Pchip(std::move(nodes), std::move(ddf_values));
    pot.lo_ = pot.tab_f_.x.front();
    pot.hi_ = pot.tab_f_.x.back();
    if (pot.lo_ < -1.0 || pot.hi_ > 1.0)
        throw ValidationError("potential: tabulated nodes must lie inside [-1, 1]");
    return pot;
}

double Potential::F(double s) const {
    switch (kind_) {
    case PotentialKind::flory_huggins: return eval_F(s, params_);
    case PotentialKind::quadratic:
        if (std::fabs(s) > 1.0)
            throw ValidationError("potential: F is defined on [-1, 1], got s=" + fmt_s(s));
        return 0.5 * params_.theta * s * s;
    case PotentialKind::tabulated: return tab_f_(s);
    }
    return 0.0;
}

double Potential::dF(double s) const {
    switch (kind_) {
    case PotentialKind::flory_huggins: return eval_dF(s, params_);
    case PotentialKind::quadratic:
        if (!(std::fabs(s) < 1.0))
            throw ValidationError("potential: F' requires |s| < 1, got s=" + fmt_s(s));
        return params_.theta * s;
    case PotentialKind::tabulated: return tab_df_(s);
    }
    return 0.0;
}

double Potential::ddF(double s) const {
    switch (kind_) {
    case PotentialKind::flory_huggins: return eval_ddF(s, params_);
    case PotentialKind::quadratic:
        if (!(std::fabs(s) < 1.0))
            throw ValidationError("potential: F'' requires |s| < 1, got s=" + fmt_s(s));
        return params_.theta;
    case PotentialKind::tabulated: return tab_ddf_(s);
    }
    return 0.0;
}

double Potential::dddF(double s) const {
    if (!has_dddF())
        throw ValidationError("potential: third derivative is only available for the built-in "
                              "logarithmic form");
    return eval_dddF(s, params_);
}

AssumptionReport check_assumptions(const Potential& pot, int n_samples) {
    if (n_samples < 2)
        throw ValidationError("check_assumptions: n_samples must be >= 2, got " +
                              std::to_string(n_samples));
    const PotentialParams& p = pot.params();
    AssumptionReport rep;

    // keep the probe grid strictly inside the admissible range; for the
    // built-in forms that means staying a hair away from +-1
    const double smax = std::min({1.0 - 1e-6, pot.hi(), -pot.lo()});

    // convexity floor on a symmetric grid
    {
        const int m = 4097;
        double lo_seen = std::numeric_limits<double>::infinity();
        for (int j = 0; j < m; ++j) {
            const double s = (2.0 * j / double(m - 1) - 1.0) * smax;
            lo_seen = std::min(lo_seen, pot.ddF(s));
        }
        rep.min_ddf = lo_seen;
        rep.a1_ok = lo_seen >= p.theta;
    }

    // monotonicity of F'' near each endpoint: non-decreasing on [1-eps0, smax],
    // non-increasing on [-smax, -1+eps0]
    {
        const int m = 1025;
        bool ok = true;
        const double a = 1.0 - p.eps0;
        if (a < smax) {
            double prev = pot.ddF(a);
            for (int j = 1; j < m; ++j) {
                const double s = a + (smax - a) * j / double(m - 1);
                const double cur = pot.ddF(s);
                if (cur < prev) { ok = false; break; }
                prev = cur;
            }
            if (ok) {
                double prev2 = pot.ddF(-smax);
                for (int j = 1; j < m; ++j) {
                    const double s = -smax + (smax - a) * j / double(m - 1);
                    const double cur = pot.ddF(s);
                    if (cur > prev2) { ok = false; break; }
                    prev2 = cur;
                }
            }
        }
        rep.a2_ok = ok;
    }

    // endpoint ratio bounds, sampled log-uniformly in delta
    {
        double dmin = 1e-8;
        // tables that stop short of the endpoints can only be probed where
        // 1 - 2 delta stays inside their node span
        dmin = std::max(dmin, (1.0 - pot.hi()) / 2.0 + 1e-12);
        dmin = std::max(dmin, (1.0 + pot.lo()) / 2.0 + 1e-12);
        if (dmin >= p.eps1)
            throw ValidationError("check_assumptions: potential range too narrow to probe "
                                  "deltas up to eps1");
        const double la = std::log(dmin);
        const double lb = std::log(p.eps1);
        double best = 1.0;
        double best_delta = p.eps1;
        bool finite = true;
        for (int i = 0; i < n_samples; ++i) {
            const double delta =
                (i == n_samples - 1) ? p.eps1 : std::exp(la + (lb - la) * (i + 1) / double(n_samples));
            const double labs = std::fabs(std::log(delta));
            const double sp = 1.0 - 2.0 * delta;
            const double sm = -1.0 + 2.0 * delta;
            const double inf = std::numeric_limits<double>::infinity();
            const double fp = pot.dF(sp);
            const double fm = pot.dF(sm);
            const double gp = pot.ddF(sp);
            const double gm = pot.ddF(sm);
            const double ratios[4] = {
                fp > 0.0 ? labs / fp : inf,
                fm < 0.0 ? labs / -fm : inf,
                gp > 0.0 ? 1.0 / (delta * gp) : inf,
                gm > 0.0 ? 1.0 / (delta * gm) : inf,
            };
            for (double r : ratios) {
                if (!std::isfinite(r)) finite = false;
                if (r > best) { best = r; best_delta = delta; }
            }
        }
        rep.c_f_estimate = best;
        rep.worst_delta = best_delta;
        rep.a3_ok = finite && best <= p.c_f;
    }
    return rep;
}

AssumptionReport check_assumptions(const PotentialParams& p, int n_samples) {
    return check_assumptions(Potential::flory_huggins(p), n_samples);
}

} // namespace nlch
