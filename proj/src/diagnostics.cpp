#include "nlch/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <limits>
#include <random>

#include "nlch/errors.hpp"
#include "nlch/log.hpp"

namespace nlch {

static std::string fmt_g(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// iteration lemma

IterLemmaReport iter_lemma_check(double C, double b, double eps, double y0, long n_max) {
    if (!(C > 0.0) || !std::isfinite(C)) throw ValidationError("iter_lemma: C must be > 0");
    if (!(b > 1.0) || !std::isfinite(b)) throw ValidationError("iter_lemma: b must be > 1");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw ValidationError("iter_lemma: eps must be > 0");
    if (!(y0 >= 0.0) || !std::isfinite(y0)) throw ValidationError("iter_lemma: y0 must be >= 0");
    if (n_max < 1) throw ValidationError("iter_lemma: n_max must be >= 1");

    IterLemmaReport r;
    const double ln_c = std::log(C);
    const double ln_b = std::log(b);
    r.ln_threshold = -ln_c / eps - ln_b / (eps * eps);

    if (y0 == 0.0) {
        // the recursion is identically zero; everything holds
        const double ninf = -std::numeric_limits<double>::infinity();
        r.precondition_ok = true;
        r.conclusion_ok = true;
        r.ln_y.assign(std::size_t(n_max) + 1, ninf);
        r.ln_bound.assign(std::size_t(n_max) + 1, ninf);
        return r;
    }

    const double ln_y0 = std::log(y0);
    r.precondition_ok = ln_y0 <= r.ln_threshold;
    r.conclusion_ok = true;
    r.ln_y.reserve(std::size_t(n_max) + 1);
    r.ln_bound.reserve(std::size_t(n_max) + 1);

    const double u = std::ldexp(1.0, -52);
    double ln_y = ln_y0;
    double err = 0.0; // forward rounding bound; grows with the recursion's condition number
    for (long n = 0; n <= n_max; ++n) {
        const double bound = ln_y0 - double(n) * ln_b / eps;
        r.ln_y.push_back(ln_y);
        r.ln_bound.push_back(bound);
        bool violated;
        if (std::isinf(ln_y))
            violated = ln_y > 0.0;
        else
            violated = ln_y > bound + err + 1e-12 * (1.0 + std::abs(bound));
        if (violated) {
            r.conclusion_ok = false;
            if (r.first_violation < 0) r.first_violation = n;
        }
        if (n < n_max) {
            const double next = ln_c + double(n) * ln_b + (1.0 + eps) * ln_y;
            err = (1.0 + eps) * err +
                  u * (std::abs(ln_c) + double(n) * ln_b + (1.0 + eps) * std::abs(ln_y) +
                       std::abs(next));
            ln_y = next;
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// separation

SeparationProfile separation_profile(const Trajectory& traj, double tau) {
    if (traj.series.empty()) throw ValidationError("separation: trajectory has an empty series");
    const double t_end = traj.series.back().time;
    if (tau > t_end + 1e-12 * std::max(1.0, std::abs(t_end)))
        throw ValidationError("separation: tau = " + fmt_g(tau) +
                              " lies beyond the trajectory end " + fmt_g(t_end));
    SeparationProfile sp;
    sp.tau = tau;
    sp.delta_emp = std::numeric_limits<double>::infinity();
    const double tol = 1e-12 * std::max(1.0, std::abs(tau));
    for (const SeriesRow& row : traj.series) {
        sp.times.push_back(row.time);
        sp.gaps.push_back(row.min_gap);
        if (row.time >= tau - tol) sp.delta_emp = std::min(sp.delta_emp, row.min_gap);
    }
    return sp;
}

// ---------------------------------------------------------------------------
// De Giorgi level sets
//
// All levels integrate |A_n(t)| over one shared time mesh (window snapshots
// plus the level start points), accumulating segments left to right in the
// same order. Counts fall with the level and segment sets shrink with n, so
// every partial sum is dominated term by term and y_{n+1} <= y_n survives
// floating-point rounding exactly, with no tolerance in the comparison.

DeGiorgiReport degiorgi_sequences(const Trajectory& traj, const DeGiorgiParams& dp,
                                  const Kernel& ker, const PotentialParams& p) {
    validate(p);
    if (!(dp.tau_tilde > 0.0)) throw ValidationError("degiorgi: tau_tilde must be positive");
    if (dp.n_levels < 1) throw ValidationError("degiorgi: n_levels must be >= 1");
    const double delta_max = std::min(p.eps0 / 2.0, p.eps1);
    if (!(dp.delta > 0.0) || !(dp.delta < delta_max))
        throw ValidationError("degiorgi: delta must lie in (0, " + fmt_g(delta_max) +
                              "), got " + fmt_g(dp.delta));
    const double t_start = dp.T - 3.0 * dp.tau_tilde;
    const double tol = 1e-12 * std::max(1.0, std::abs(dp.T));
    if (t_start < -tol)
        throw ValidationError("degiorgi: window start T - 3 tau_tilde = " + fmt_g(t_start) +
                              " is negative");
    if (traj.snapshots.empty()) throw ValidationError("degiorgi: trajectory has no snapshots");

    const auto& st = traj.snapshot_times;
    if (st.front() > t_start + tol || st.back() < dp.T - tol)
        throw ValidationError("degiorgi: snapshots span [" + fmt_g(st.front()) + ", " +
                              fmt_g(st.back()) + "] but the window is [" + fmt_g(t_start) +
                              ", " + fmt_g(dp.T) + "]");

    const int L = dp.n_levels;
    std::vector<double> tstarts(std::size_t(L) + 1); // tstarts[n] = left end of I_n
    tstarts[0] = t_start;
    for (int n = 1; n <= L; ++n)
        tstarts[std::size_t(n)] =
            tstarts[std::size_t(n) - 1] + dp.tau_tilde * std::ldexp(1.0, -(n - 1));

    for (int n = 0; n <= L; ++n) {
        int cnt = 0;
        for (double t : st)
            if (t >= tstarts[std::size_t(n)] - tol && t <= dp.T + tol) ++cnt;
        if (cnt < 2)
            throw ValidationError("degiorgi: window I_" + std::to_string(n) + " = [" +
                                  fmt_g(tstarts[std::size_t(n)]) + ", " + fmt_g(dp.T) +
                                  "] contains " + std::to_string(cnt) +
                                  " snapshot(s); need at least 2");
    }

    // snapshots that can appear in quadrature or as interpolation brackets
    int j_lo = 0;
    while (j_lo + 1 < int(st.size()) && st[std::size_t(j_lo) + 1] <= t_start + tol) ++j_lo;
    int j_hi = int(st.size()) - 1;
    while (j_hi > 0 && st[std::size_t(j_hi) - 1] >= dp.T - tol) --j_hi;

    const double sgn = dp.sign == LevelSign::plus ? 1.0 : -1.0;
    std::vector<std::vector<double>> sorted(st.size()); // signed, ascending, used range only
    double sup_window = -std::numeric_limits<double>::infinity();
    for (int j = j_lo; j <= j_hi; ++j) {
        const auto& v = traj.snapshots[std::size_t(j)].v;
        auto& s = sorted[std::size_t(j)];
        s.resize(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) s[i] = sgn * v[i];
        std::sort(s.begin(), s.end());
        if (st[std::size_t(j)] >= t_start - tol && st[std::size_t(j)] <= dp.T + tol)
            sup_window = std::max(sup_window, s.back());
    }

    std::vector<double> kth(std::size_t(L) + 1);
    for (int n = 0; n <= L; ++n)
        kth[std::size_t(n)] = 1.0 - dp.delta - dp.delta * std::ldexp(1.0, -n);

    // shared mesh: level starts, window snapshots, and T
    struct Node {
        double t;
        int a, b;  // bracketing snapshots; a == b at snapshot times
        double w;  // interpolation weight toward b
    };
    std::vector<double> node_times(tstarts);
    node_times.push_back(dp.T);
    for (int j = j_lo; j <= j_hi; ++j)
        if (st[std::size_t(j)] > t_start + tol && st[std::size_t(j)] < dp.T - tol)
            node_times.push_back(st[std::size_t(j)]);
    std::sort(node_times.begin(), node_times.end());
    node_times.erase(std::unique(node_times.begin(), node_times.end(),
                                 [tol](double a, double b) { return b - a <= tol; }),
                     node_times.end());

    std::vector<Node> nodes;
    nodes.reserve(node_times.size());
    for (double t : node_times) {
        Node nd{t, -1, -1, 0.0};
        for (int j = j_lo; j <= j_hi; ++j)
            if (std::abs(st[std::size_t(j)] - t) <= tol) {
                nd.a = nd.b = j;
                break;
            }
        if (nd.a < 0) {
            int j = j_lo;
            while (j + 1 <= j_hi && st[std::size_t(j) + 1] < t) ++j;
            nd.a = j;
            nd.b = j + 1;
            nd.w = (t - st[std::size_t(j)]) / (st[std::size_t(j) + 1] - st[std::size_t(j)]);
        }
        nodes.push_back(nd);
    }

    // counts per level per node; identical interpolation expressions across
    // levels keep the columns ordered even after rounding
    const std::size_t nn = nodes.size();
    std::vector<std::vector<double>> cnt(std::size_t(L) + 1, std::vector<double>(nn, 0.0));
    auto count_at = [&](int level, int snap) {
        const auto& s = sorted[std::size_t(snap)];
        return double(s.end() - std::lower_bound(s.begin(), s.end(), kth[std::size_t(level)]));
    };
    for (int n = 0; n <= L; ++n)
        for (std::size_t s = 0; s < nn; ++s) {
            const Node& nd = nodes[s];
            if (nd.a == nd.b) {
                cnt[std::size_t(n)][s] = count_at(n, nd.a);
            } else {
                const double ca = count_at(n, nd.a);
                const double cb = count_at(n, nd.b);
                cnt[std::size_t(n)][s] = ca + nd.w * (cb - ca);
            }
        }

    // level start node indices (every tstart is a mesh node)
    std::vector<std::size_t> start_idx(std::size_t(L) + 1, 0);
    for (int n = 0; n <= L; ++n) {
        std::size_t s = 0;
        while (s + 1 < nn && nodes[s].t < tstarts[std::size_t(n)] - tol) ++s;
        start_idx[std::size_t(n)] = s;
    }

    const double cellvol = traj.domain.cell_volume();
    DeGiorgiReport rep;
    rep.levels.resize(std::size_t(L) + 1);
    const double ddf = eval_ddF(1.0 - 2.0 * dp.delta, p);
    const double l1g = ker.l1_grad_j();
    const double factor =
        std::max(l1g * l1g / ddf, 16.0 * dp.delta * dp.delta / dp.tau_tilde);

    for (int n = 0; n <= L; ++n) {
        double acc = 0.0;
        for (std::size_t s = start_idx[std::size_t(n)]; s + 1 < nn; ++s)
            acc += 0.5 * (nodes[s + 1].t - nodes[s].t) *
                   (cnt[std::size_t(n)][s] + cnt[std::size_t(n)][s + 1]);
        DeGiorgiLevel& lv = rep.levels[std::size_t(n)];
        lv.t_start = tstarts[std::size_t(n)];
        lv.k = kth[std::size_t(n)];
        lv.y = acc * cellvol;
        lv.x = std::ldexp(1.0, n) * factor * lv.y;
    }

    rep.sup_phi_window = sup_window;
    rep.po_ok = sup_window <= 1.0;
    rep.nesting_ok = true;
    for (int n = 0; n < L; ++n)
        if (rep.levels[std::size_t(n) + 1].y > rep.levels[std::size_t(n)].y)
            rep.nesting_ok = false;
    const double y0 = rep.levels.front().y;
    const double ylast = rep.levels.back().y;
    rep.decayed = y0 == 0.0 || ylast <= 1e-12 * y0;
    return rep;
}

// ---------------------------------------------------------------------------
// interpolation-inequality ratio

double gn_ratio(const Field& f) {
    const double l2 = norm_l2(f);
    if (l2 == 0.0) throw ValidationError("gn_ratio: zero field");
    const double a = double(f.domain.dim) / 5.0;
    return norm_lp(f, 10.0 / 3.0) / (std::pow(l2, 1.0 - a) * std::pow(norm_h1(f), a));
}

GnBatteryReport gn_battery(const Domain& d, int n_random, std::uint64_t seed) {
    if (n_random < 1) throw ValidationError("gn_battery: n_random must be >= 1");
    GnBatteryReport rep;
    auto consider = [&rep](const Field& f, const std::string& kind) {
        double r;
        try {
            r = gn_ratio(f);
        } catch (const ValidationError&) {
            return;
        }
        ++rep.fields_tested;
        if (r > rep.max_ratio) {
            rep.max_ratio = r;
            rep.argmax_kind = kind;
        }
    };

    consider(Field(d, 0.7), "constant");

    for (int waves = 1; waves <= 4; ++waves) {
        Field f(d);
        for (std::size_t i = 0; i < f.v.size(); ++i) {
            const auto ix = unravel_index(d, long(i));
            double u = 1.0;
            for (int a = 0; a < d.dim; ++a)
                u *= std::cos(M_PI * double(waves) * cell_center(d, a, ix[std::size_t(a)]) /
                              d.extents[std::size_t(a)]);
            f.v[i] = u;
        }
        consider(f, "mode_" + std::to_string(waves));
    }

    {
        Field f(d); // plateau: smoothed indicator of a centered ball
        for (std::size_t i = 0; i < f.v.size(); ++i) {
            const auto ix = unravel_index(d, long(i));
            double r2 = 0.0;
            for (int a = 0; a < d.dim; ++a) {
                const double dx =
                    cell_center(d, a, ix[std::size_t(a)]) - 0.5 * d.extents[std::size_t(a)];
                r2 += dx * dx;
            }
            const double l = d.extents[0];
            f.v[i] = std::tanh((0.2 * l - std::sqrt(r2)) / (0.05 * l));
        }
        consider(f, "plateau");

        Field s(d);
        s.v[std::size_t(d.cell_count() / 2)] = 1.0;
        consider(s, "spike");
    }

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    std::uniform_int_distribution<int> mode(1, 3);
    for (int k = 0; k < n_random; ++k) {
        Field u(d);
        for (double& x : u.v) x = uni(rng);
        consider(u, "random");

        Field sm(d); // superposition of a few low modes with random weights
        std::array<std::array<int, 3>, 3> kk{};
        std::array<double, 3> cc{};
        for (int m = 0; m < 3; ++m) {
            cc[std::size_t(m)] = uni(rng);
            for (int a = 0; a < d.dim; ++a) kk[std::size_t(m)][std::size_t(a)] = mode(rng);
        }
        for (std::size_t i = 0; i < sm.v.size(); ++i) {
            const auto ix = unravel_index(d, long(i));
            double val = 0.0;
            for (int m = 0; m < 3; ++m) {
                double u2 = cc[std::size_t(m)];
                for (int a = 0; a < d.dim; ++a)
                    u2 *= std::cos(M_PI * double(kk[std::size_t(m)][std::size_t(a)]) *
                                   cell_center(d, a, ix[std::size_t(a)]) /
                                   d.extents[std::size_t(a)]);
                val += u2;
            }
            sm.v[i] = val;
        }
        consider(sm, "smooth_random");
    }
    return rep;
}

// ---------------------------------------------------------------------------
// separation certificate

double c_j_from_l1_grad(double l1_gradJ) {
    if (!(l1_gradJ > 0.0) || !std::isfinite(l1_gradJ))
        throw ValidationError("certificate: l1_gradJ must be > 0");
    return std::max(std::pow(l1_gradJ, 10.0 / 3.0), std::pow(l1_gradJ, 4.0 / 3.0));
}

static void validate_constants(const CertificateConstants& c, double tau) {
    auto need_pos = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError(std::string("certificate: ") + name + " must be > 0");
    };
    need_pos(c.c_f, "c_f");
    need_pos(c.c_omega, "c_omega");
    need_pos(c.c_j, "c_j");
    need_pos(c.l1_gradJ, "l1_gradJ");
    need_pos(c.energy_constant, "energy_constant");
    need_pos(tau, "tau");
    if (c.c_f < 1.0) throw ValidationError("certificate: c_f must be >= 1");
    if (!(c.eps0 > 0.0 && c.eps0 < 1.0))
        throw ValidationError("certificate: eps0 must lie in (0, 1)");
    if (!(c.eps1 > 0.0 && c.eps1 < 0.5))
        throw ValidationError("certificate: eps1 must lie in (0, 1/2)");
}

// Feasibility of the gap sandwich
//   2^4 delta / (c_f l1^2)  <=  tau_tilde  <=  delta |ln delta| / (3 2^(77/4) cO^1.5 c_f^5 cJ^1.5 C)
// reduces, after equating the two sides, to |ln delta| >= K with
//   K = 2^4 * 3 2^(77/4) cO^1.5 c_f^4 cJ^1.5 C / l1^2 = 3 2^(93/4) cO^1.5 c_f^4 cJ^1.5 C / l1^2.
SeparationCertificate delta_certificate(const CertificateConstants& c, double tau) {
    validate_constants(c, tau);
    const double ln2 = std::log(2.0);
    const double ln_k = std::log(3.0) + (93.0 / 4.0) * ln2 + 1.5 * std::log(c.c_omega) +
                        4.0 * std::log(c.c_f) + 1.5 * std::log(c.c_j) +
                        std::log(c.energy_constant) - 2.0 * std::log(c.l1_gradJ);
    const double K = std::exp(ln_k);
    if (!std::isfinite(K))
        throw ValidationError("certificate: feasibility threshold overflows; constants too large");

    SeparationCertificate cert;
    cert.ln_K = ln_k;
    cert.constants_used = c;
    cert.tau = tau;
    cert.ln_delta =
        std::min({-K, std::log(c.eps0 / 2.0), std::log(c.eps1)}) - ln2; // margin factor 2
    double ln_tau_tilde =
        4.0 * ln2 + cert.ln_delta - std::log(c.c_f) - 2.0 * std::log(c.l1_gradJ);
    const double cap = std::log(tau / 5.0);
    if (ln_tau_tilde > cap) {
        // shrink delta until the window constraint tau_tilde <= tau/5 binds
        cert.ln_delta -= ln_tau_tilde - cap;
        ln_tau_tilde =
            4.0 * ln2 + cert.ln_delta - std::log(c.c_f) - 2.0 * std::log(c.l1_gradJ);
    }
    cert.ln_tau_tilde = ln_tau_tilde;
    cert.tau_tilde = std::exp(ln_tau_tilde);
    cert.feasible = true;
    return cert;
}

bool certificate_sound(const SeparationCertificate& cert, double rel_tol) {
    const CertificateConstants& c = cert.constants_used;
    const double ln2 = std::log(2.0);
    if (!(cert.ln_delta < 0.0)) return false;
    const double lower_ln =
        4.0 * ln2 + cert.ln_delta - std::log(c.c_f) - 2.0 * std::log(c.l1_gradJ);
    const double denom_ln = std::log(3.0) + (77.0 / 4.0) * ln2 + 1.5 * std::log(c.c_omega) +
                            5.0 * std::log(c.c_f) + 1.5 * std::log(c.c_j) +
                            std::log(c.energy_constant);
    const double upper_ln = cert.ln_delta + std::log(-cert.ln_delta) - denom_ln;
    const double cap_ln = std::log(cert.tau / 5.0);
    const double slack =
        rel_tol * (1.0 + std::abs(lower_ln) + std::abs(upper_ln) + std::abs(cap_ln));
    return lower_ln <= cert.ln_tau_tilde + slack && cert.ln_tau_tilde <= upper_ln + slack &&
           cert.ln_tau_tilde <= cap_ln + slack;
}

// ---------------------------------------------------------------------------
// energy constant and chemical-potential bounds

double energy_constant_estimate(const Trajectory& traj, double tau, const PotentialParams& p) {
    validate(p);
    if (traj.snapshots.empty())
        throw ValidationError("energy constant: trajectory has no snapshots");
    const double lo = tau / 2.0;
    const double tol = 1e-12 * std::max(1.0, std::abs(tau));
    double sup = -1.0;
    for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
        if (traj.snapshot_times[j] < lo - tol) continue;
        const auto& v = traj.snapshots[j].v;
        double s = 0.0;
        for (double x : v) s += std::abs(eval_dF(x, p));
        sup = std::max(sup, s * traj.domain.cell_volume());
    }
    if (sup < 0.0)
        throw ValidationError("energy constant: no snapshot at or after tau/2 = " + fmt_g(lo));
    return sup;
}

MuBoundReport mu_bound_check(const Trajectory& traj, double tau, double delta, const Kernel& k,
                             const PotentialParams& p) {
    const SeparationProfile sep = separation_profile(traj, tau);
    if (!(delta > 0.0) || delta > sep.delta_emp)
        throw ValidationError("mu bound: delta = " + fmt_g(delta) +
                              " exceeds the measured separation delta_emp = " +
                              fmt_g(sep.delta_emp));
    MuBoundReport rep;
    rep.delta_used = delta;
    rep.c1 = std::abs(eval_dF(1.0 - delta, p)) + k.l1_j();

    const double tol = 1e-9 * std::max(1.0, std::abs(tau));
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < traj.snapshots.size(); ++j)
        if (traj.snapshot_times[j] >= tau - tol) idx.push_back(j);
    if (idx.size() < 2)
        throw ValidationError("mu bound: need at least 2 snapshots at or after tau = " +
                              fmt_g(tau));

    std::vector<Field> mus;
    mus.reserve(idx.size());
    for (std::size_t j : idx) {
        mus.push_back(chemical_potential(traj.snapshots[j], k, p));
        rep.sup_mu_inf = std::max(rep.sup_mu_inf, norm_linf(mus.back()));
    }
    rep.ok = rep.sup_mu_inf <= rep.c1;

    // L2-in-time rate of mu over unit windows, by forward differences
    const double t_last = traj.snapshot_times[idx.back()];
    std::vector<double> starts;
    for (std::size_t j : idx)
        if (traj.snapshot_times[j] + 1.0 <= t_last + tol) starts.push_back(traj.snapshot_times[j]);
    if (starts.empty()) starts.push_back(tau); // short trajectory: one partial window
    for (double t0 : starts) {
        const double t1 = std::min(t0 + 1.0, t_last);
        double acc = 0.0;
        for (std::size_t m = 0; m + 1 < idx.size(); ++m) {
            const double ta = traj.snapshot_times[idx[m]];
            const double tb = traj.snapshot_times[idx[m + 1]];
            if (ta < t0 - tol || tb > t1 + tol) continue;
            const double dt = tb - ta;
            if (dt <= 0.0) continue;
            double ss = 0.0;
            for (std::size_t i = 0; i < mus[m].v.size(); ++i) {
                const double diff = mus[m + 1].v[i] - mus[m].v[i];
                ss += diff * diff;
            }
            acc += ss * traj.domain.cell_volume() / dt;
        }
        rep.c2 = std::max(rep.c2, std::sqrt(acc));
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Hölder continuity

HolderData collect_structure(const Trajectory& traj, double t0, double t1, int pairs_per_scale,
                             std::uint64_t seed) {
    if (pairs_per_scale < 1) throw ValidationError("holder: pairs_per_scale must be >= 1");
    if (!(t1 > t0)) throw ValidationError("holder: window end must exceed its start");
    const Domain& d = traj.domain;
    const double tol = 1e-9 * std::max(1.0, std::abs(t1));

    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < traj.snapshots.size(); ++j)
        if (traj.snapshot_times[j] >= t0 - tol && traj.snapshot_times[j] <= t1 + tol)
            idx.push_back(j);
    if (idx.size() < 4)
        throw ValidationError("holder: window [" + fmt_g(t0) + ", " + fmt_g(t1) + "] holds " +
                              std::to_string(idx.size()) + " snapshot(s); need at least 4");

    double hmax = 0.0, lmin = std::numeric_limits<double>::infinity();
    for (int a = 0; a < d.dim; ++a) {
        hmax = std::max(hmax, d.spacing(a));
        lmin = std::min(lmin, d.extents[std::size_t(a)]);
    }
    const auto strides = d.strides();

    HolderData out;
    std::vector<double> scales;
    for (double r = 2.0 * hmax; r <= lmin / 4.0 + 1e-12; r *= 2.0) scales.push_back(r);

    for (std::size_t si = 0; si < scales.size(); ++si) {
        const double r = scales[si];
        std::mt19937_64 rng(seed ^ (0x9E3779B97F4A7C15ull * (si + 1)));

        std::array<long, 3> off{0, 0, 0};
        std::array<long, 3> npos{0, 0, 0}; // base positions per axis
        long total = 0;
        for (int a = 0; a < d.dim; ++a) {
            off[std::size_t(a)] = std::max(1L, std::lround(r / d.spacing(a)));
            long n = d.cells[std::size_t(a)] > off[std::size_t(a)]
                         ? (d.cell_count() / d.cells[std::size_t(a)]) *
                               (d.cells[std::size_t(a)] - off[std::size_t(a)])
                         : 0;
            npos[std::size_t(a)] = n;
            total += n;
        }
        if (total == 0) continue;

        double smax = 0.0, smax_int = 0.0;
        auto eval_pair = [&](std::size_t snap, int axis, std::array<long, 3> base) {
            std::array<long, 3> other = base;
            other[std::size_t(axis)] += off[std::size_t(axis)];
            long la = 0, lb = 0;
            for (int a = 0; a < 3; ++a) {
                la += base[std::size_t(a)] * strides[std::size_t(a)];
                lb += other[std::size_t(a)] * strides[std::size_t(a)];
            }
            const auto& v = traj.snapshots[snap].v;
            const double inc = std::abs(v[std::size_t(la)] - v[std::size_t(lb)]);
            smax = std::max(smax, inc);
            bool interior = true;
            for (int a = 0; a < d.dim && interior; ++a) {
                const double l = d.extents[std::size_t(a)];
                const double xa = cell_center(d, a, base[std::size_t(a)]);
                const double xb = cell_center(d, a, other[std::size_t(a)]);
                interior = xa >= l / 8.0 && xa <= 7.0 * l / 8.0 && xb >= l / 8.0 &&
                           xb <= 7.0 * l / 8.0;
            }
            if (interior) smax_int = std::max(smax_int, inc);
        };

        if (total * long(idx.size()) <= long(pairs_per_scale)) {
            // exhaustive sweep: every snapshot, axis and base position
            for (std::size_t snap : idx)
                for (int a = 0; a < d.dim; ++a)
                    for (long i = 0; i < d.cell_count(); ++i) {
                        auto base = unravel_index(d, i);
                        if (base[std::size_t(a)] + off[std::size_t(a)] <
                            d.cells[std::size_t(a)])
                            eval_pair(snap, a, base);
                    }
        } else if (total <= long(pairs_per_scale)) {
            // every base position, one random snapshot each; the spatial sup
            // is exact whenever the field varies slowly in time
            std::uniform_int_distribution<std::size_t> pick_snap(0, idx.size() - 1);
            for (int a = 0; a < d.dim; ++a)
                for (long i = 0; i < d.cell_count(); ++i) {
                    auto base = unravel_index(d, i);
                    if (base[std::size_t(a)] + off[std::size_t(a)] < d.cells[std::size_t(a)])
                        eval_pair(idx[pick_snap(rng)], a, base);
                }
        } else {
            std::uniform_int_distribution<std::size_t> pick_snap(0, idx.size() - 1);
            std::uniform_int_distribution<long> pick_pos(0, total - 1);
            for (int k = 0; k < pairs_per_scale; ++k) {
                const std::size_t snap = idx[pick_snap(rng)];
                long pos = pick_pos(rng);
                int axis = 0;
                while (pos >= npos[std::size_t(axis)]) {
                    pos -= npos[std::size_t(axis)];
                    ++axis;
                }
                // decode pos over the reduced lattice of valid bases
                std::array<long, 3> base{0, 0, 0};
                for (int a = d.dim - 1; a >= 0; --a) {
                    const long na = a == axis
                                        ? d.cells[std::size_t(a)] - off[std::size_t(a)]
                                        : d.cells[std::size_t(a)];
                    base[std::size_t(a)] = pos % na;
                    pos /= na;
                }
                eval_pair(snap, axis, base);
            }
        }
        if (smax > 0.0) out.space.push_back({r, smax});
        if (smax_int > 0.0) out.space_interior.push_back({r, smax_int});
    }

    // time lags: dyadic multiples of the finest snapshot spacing
    double dt_min = std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m + 1 < idx.size(); ++m)
        dt_min = std::min(dt_min, traj.snapshot_times[idx[m + 1]] - traj.snapshot_times[idx[m]]);
    if (std::isfinite(dt_min) && dt_min > 0.0) {
        int si = 0;
        for (double lag = dt_min; lag <= (t1 - t0) / 2.0 + tol; lag *= 2.0, ++si) {
            std::mt19937_64 rng(seed ^ 0x517cc1b727220a95ull ^
                                (0x2545f4914f6cdd1dull * std::uint64_t(si + 1)));
            std::uniform_int_distribution<std::size_t> pick_snap(0, idx.size() - 1);
            std::uniform_int_distribution<long> pick_cell(0, d.cell_count() - 1);
            double tmax = 0.0;
            bool any = false;
            for (int k = 0; k < pairs_per_scale; ++k) {
                const std::size_t m = pick_snap(rng);
                const double want = traj.snapshot_times[idx[m]] + lag;
                // nearest window snapshot to the target time
                std::size_t best = m;
                double err = std::numeric_limits<double>::infinity();
                for (std::size_t j = m; j < idx.size(); ++j) {
                    const double e = std::abs(traj.snapshot_times[idx[j]] - want);
                    if (e < err) {
                        err = e;
                        best = j;
                    }
                    if (traj.snapshot_times[idx[j]] > want) break;
                }
                if (best == m || err > 0.25 * lag) continue;
                const long cell = pick_cell(rng);
                tmax = std::max(tmax, std::abs(traj.snapshots[idx[best]].v[std::size_t(cell)] -
                                               traj.snapshots[idx[m]].v[std::size_t(cell)]));
                any = true;
            }
            if (any && tmax > 0.0) out.time.push_back({lag, tmax});
        }
    }
    return out;
}

static constexpr double kNoiseFloor = 1e-14;

static bool ls_slope(const std::vector<HolderScale>& pts, double* slope) {
    // least squares of ln(increment) against ln(scale), finest 4 resolved scales
    std::vector<std::pair<double, double>> xy;
    for (const HolderScale& b : pts)
        if (b.increment > kNoiseFloor) xy.push_back({std::log(b.scale), std::log(b.increment)});
    std::sort(xy.begin(), xy.end());
    if (xy.size() > 4) xy.resize(4);
    if (xy.size() < 2) return false;
    double mx = 0.0, my = 0.0;
    for (auto& q : xy) {
        mx += q.first;
        my += q.second;
    }
    mx /= double(xy.size());
    my /= double(xy.size());
    double sxx = 0.0, sxy = 0.0;
    for (auto& q : xy) {
        sxx += (q.first - mx) * (q.first - mx);
        sxy += (q.first - mx) * (q.second - my);
    }
    if (sxx == 0.0) return false;
    *slope = sxy / sxx;
    return true;
}

static double clip_alpha(double a) { return std::min(1.0, std::max(0.05, a)); }

double holder_c3_at(const HolderData& data, double alpha) {
    double c = 0.0;
    for (const HolderScale& b : data.space)
        if (b.increment > kNoiseFloor)
            c = std::max(c, b.increment / std::pow(b.scale, alpha));
    for (const HolderScale& b : data.time)
        if (b.increment > kNoiseFloor)
            c = std::max(c, b.increment / std::pow(b.scale, alpha / 2.0));
    return c;
}

HolderFit fit_holder(const HolderData& data) {
    HolderFit f;
    double s_sp = 0.0, s_tm = 0.0;
    const bool have_sp = ls_slope(data.space, &s_sp);
    const bool have_tm = ls_slope(data.time, &s_tm);
    if (!have_sp && !have_tm) return f; // degenerate: (1, 0)
    double alpha = std::numeric_limits<double>::infinity();
    if (have_sp) alpha = std::min(alpha, s_sp);
    if (have_tm) alpha = std::min(alpha, 2.0 * s_tm);
    f.alpha = clip_alpha(alpha);
    f.c3 = holder_c3_at(data, f.alpha);
    f.degenerate = false;

    double s_int = 0.0;
    if (ls_slope(data.space_interior, &s_int)) {
        f.alpha_interior = clip_alpha(have_tm ? std::min(s_int, 2.0 * s_tm) : s_int);
        double c = 0.0;
        for (const HolderScale& b : data.space_interior)
            if (b.increment > kNoiseFloor)
                c = std::max(c, b.increment / std::pow(b.scale, f.alpha_interior));
        for (const HolderScale& b : data.time)
            if (b.increment > kNoiseFloor)
                c = std::max(c, b.increment / std::pow(b.scale, f.alpha_interior / 2.0));
        f.c3_interior = c;
    }
    return f;
}

HolderFit holder_estimate(const Trajectory& traj, double t0, double t1, int pairs_per_scale,
                          std::uint64_t seed) {
    return fit_holder(collect_structure(traj, t0, t1, pairs_per_scale, seed));
}

// ---------------------------------------------------------------------------
// regularity scaling

RegularityReport regularity_scaling(const std::vector<Trajectory>& runs,
                                    const std::vector<double>& taus, const Kernel& ker,
                                    const PotentialParams& p) {
    validate(p);
    if (taus.size() < 3)
        throw ValidationError("regularity: need at least 3 tau values, got " +
                              std::to_string(taus.size()));
    if (runs.empty()) throw ValidationError("regularity: need at least one run");
    for (double t : taus)
        if (!(t > 0.0)) throw ValidationError("regularity: tau values must be positive");

    struct SnapNorms {
        double t, mu_h1, phi_h1, df_h1;
    };
    std::vector<std::vector<SnapNorms>> norms(runs.size());
    for (std::size_t r = 0; r < runs.size(); ++r) {
        for (std::size_t j = 0; j < runs[r].snapshots.size(); ++j) {
            const Field& phi = runs[r].snapshots[j];
            const Field mu = chemical_potential(phi, ker, p);
            Field df(phi.domain);
            for (std::size_t i = 0; i < phi.v.size(); ++i) df.v[i] = eval_dF(phi.v[i], p);
            norms[r].push_back({runs[r].snapshot_times[j], norm_h1(mu), norm_h1(phi),
                                norm_h1(df)});
        }
    }

    RegularityReport rep;
    auto fit = [&](const std::string& name,
                   const std::function<double(double)>& sup_at) -> DecayFit {
        std::vector<std::pair<double, double>> xy;
        for (double tau : taus) {
            const double s = sup_at(tau);
            if (!(s > 0.0)) return {name, 0.0, 0.0}; // stationary or empty: flat fit
            xy.push_back({std::log(tau), std::log(s)});
        }
        double mx = 0.0, my = 0.0;
        for (auto& q : xy) {
            mx += q.first;
            my += q.second;
        }
        mx /= double(xy.size());
        my /= double(xy.size());
        double sxx = 0.0, sxy = 0.0;
        for (auto& q : xy) {
            sxx += (q.first - mx) * (q.first - mx);
            sxy += (q.first - mx) * (q.second - my);
        }
        const double slope = sxy / sxx;
        return {name, std::exp(my - slope * mx), -slope};
    };

    const double tol = 1e-12;
    auto snap_sup = [&](double tau, auto member) {
        double s = -1.0;
        for (std::size_t r = 0; r < runs.size(); ++r)
            for (const SnapNorms& sn : norms[r])
                if (sn.t >= tau - tol) s = std::max(s, member(sn));
        if (s < 0.0)
            throw ValidationError("regularity: no snapshot at or after tau = " + fmt_g(tau));
        return s;
    };
    rep.fits.push_back(fit("dtphi_l2", [&](double tau) {
        double s = -1.0;
        for (const Trajectory& run : runs)
            for (const SeriesRow& row : run.series)
                if (row.time >= tau - tol) s = std::max(s, row.l2_dtphi);
        if (s < 0.0)
            throw ValidationError("regularity: no series row at or after tau = " + fmt_g(tau));
        return s;
    }));
    rep.fits.push_back(
        fit("mu_h1", [&](double tau) { return snap_sup(tau, [](const SnapNorms& s) { return s.mu_h1; }); }));
    rep.fits.push_back(
        fit("phi_h1", [&](double tau) { return snap_sup(tau, [](const SnapNorms& s) { return s.phi_h1; }); }));
    rep.fits.push_back(
        fit("df_h1", [&](double tau) { return snap_sup(tau, [](const SnapNorms& s) { return s.df_h1; }); }));
    rep.c0_fit = rep.fits[1].c0;
    rep.beta_fit = rep.fits[1].beta;

    const double tau_min = *std::min_element(taus.begin(), taus.end());
    const double tau_max = *std::max_element(taus.begin(), taus.end());
    {
        const SeparationProfile sep = separation_profile(runs[0], tau_min);
        const MuBoundReport mb = mu_bound_check(runs[0], tau_min, sep.delta_emp, ker, p);
        rep.c1_mu_inf = mb.c1;
        rep.c2_dtmu = mb.c2;
    }
    {
        const double t_last = runs[0].snapshot_times.back();
        try {
            const HolderFit hf =
                holder_estimate(runs[0], std::max(0.0, t_last - 1.0), t_last, 200, 17);
            rep.alpha_holder = hf.alpha;
            rep.c3_holder = hf.c3;
        } catch (const ValidationError&) {
            rep.alpha_holder = 1.0; // too few snapshots in the final window
            rep.c3_holder = 0.0;
        }
    }

    // L^q in time of L^p space norms of the gradients over one unit window
    const double t_last = runs[0].snapshot_times.back();
    double w0 = std::min(tau_max, std::max(0.0, t_last - 1.0));
    double w1 = std::min(w0 + 1.0, t_last);
    std::vector<std::size_t> widx;
    for (std::size_t j = 0; j < runs[0].snapshots.size(); ++j)
        if (runs[0].snapshot_times[j] >= w0 - tol && runs[0].snapshot_times[j] <= w1 + tol)
            widx.push_back(j);
    if (widx.size() < 2)
        throw ValidationError("regularity: window [" + fmt_g(w0) + ", " + fmt_g(w1) +
                              "] holds fewer than 2 snapshots");
    std::vector<Field> gmu, gphi;
    for (std::size_t j : widx) {
        gmu.push_back(gradient_magnitude(chemical_potential(runs[0].snapshots[j], ker, p)));
        gphi.push_back(gradient_magnitude(runs[0].snapshots[j]));
    }
    const double qs[3] = {0.0, 8.0 / 3.0, 2.0}; // 0 encodes q = infinity
    const double ps[3] = {2.0, 4.0, 6.0};
    for (int m = 0; m < 3; ++m) {
        LqLpNorm row;
        row.p = ps[m];
        row.q = qs[m];
        auto lq_of = [&](const std::vector<Field>& gs) {
            std::vector<double> g(widx.size());
            for (std::size_t i = 0; i < widx.size(); ++i) g[i] = norm_lp(gs[i], ps[m]);
            if (qs[m] == 0.0) return *std::max_element(g.begin(), g.end());
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < widx.size(); ++i) {
                const double dt = runs[0].snapshot_times[widx[i + 1]] -
                                  runs[0].snapshot_times[widx[i]];
                acc += 0.5 * dt * (std::pow(g[i], qs[m]) + std::pow(g[i + 1], qs[m]));
            }
            return std::pow(acc, 1.0 / qs[m]);
        };
        row.grad_mu = lq_of(gmu);
        row.grad_phi = lq_of(gphi);
        rep.lqlp_norms.push_back(row);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// attractor probe

std::vector<Field> attractor_ensemble(const Domain& d, int count, double m, std::uint64_t seed) {
    if (count < 1) throw ValidationError("attractor: ensemble size must be >= 1");
    if (!(m > 0.0 && m < 1.0)) throw ValidationError("attractor: m must lie in (0, 1)");
    std::vector<Field> out;
    out.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) {
        std::mt19937_64 rng(seed + 0x9E3779B97F4A7C15ull * std::uint64_t(i + 1));
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        const double mean_i = (1.0 - m) * uni(rng);
        const double amp = 0.5 * (1.0 - std::abs(mean_i));
        Field f(d);
        for (double& x : f.v) x = uni(rng);
        const double bar = mean(f);
        double sup = 0.0;
        for (double& x : f.v) {
            x -= bar;
            sup = std::max(sup, std::abs(x));
        }
        const double s = sup > 0.0 ? amp / sup : 0.0;
        for (double& x : f.v) x = mean_i + s * x;
        out.push_back(std::move(f));
    }
    return out;
}

AttractorReport attractor_probe(const Domain& d, const KernelSpec& kspec,
                                const PotentialParams& p, const SolverConfig& solver,
                                const std::vector<Field>& initial_data, double m, double t_long,
                                double dt, int threads) {
    validate(p);
    if (initial_data.empty()) throw ValidationError("attractor: empty ensemble");
    if (!(m > 0.0 && m < 1.0)) throw ValidationError("attractor: m must lie in (0, 1)");
    if (!(t_long > 0.0) || !(dt > 0.0) || t_long < dt)
        throw ValidationError("attractor: need 0 < dt <= t_long");
    for (std::size_t i = 0; i < initial_data.size(); ++i) {
        if (!(initial_data[i].domain == d))
            throw ValidationError("attractor: member " + std::to_string(i) +
                                  " lives on a different domain");
        const double bar = mean(initial_data[i]);
        if (bar < -(1.0 - m) - 1e-12 || bar > (1.0 - m) + 1e-12)
            throw ValidationError("attractor: member " + std::to_string(i) + " has mean " +
                                  fmt_g(bar) + " outside [-(1-m), 1-m] = [" + fmt_g(-(1.0 - m)) +
                                  ", " + fmt_g(1.0 - m) + "]");
    }

    const long every = std::max(1L, std::lround(0.05 / dt)); // about 20 snapshots per unit time
    const double t0h = std::max(0.0, t_long - 1.0);
    const int n = int(initial_data.size());
    std::vector<AttractorMember> members(static_cast<std::size_t>(n));
    std::vector<HolderData> data(static_cast<std::size_t>(n));

    auto run_member = [&](int i) {
        AttractorMember mr;
        mr.index = i;
        mr.mean0 = mean(initial_data[std::size_t(i)]);
        try {
            Kernel ker = build_kernel(kspec, d);
            const Trajectory tr =
                simulate(initial_data[std::size_t(i)], p, ker, dt, t_long, every, solver);
            mr.final_min_gap = tr.series.back().min_gap;
            data[std::size_t(i)] =
                collect_structure(tr, t0h, t_long, 200, 1234 + 7919ull * std::uint64_t(i));
            const HolderFit hf = fit_holder(data[std::size_t(i)]);
            mr.alpha = hf.alpha;
            mr.c3 = hf.c3;
            mr.ok = true;
        } catch (const std::exception& e) {
            mr.ok = false;
            mr.error = e.what();
            logf(LogLevel::error, "attractor: member %d failed: %s", i, e.what());
        }
        members[std::size_t(i)] = std::move(mr);
    };

    const int workers = std::max(1, threads);
    for (int base = 0; base < n; base += workers) {
        std::vector<std::future<void>> batch;
        for (int i = base; i < std::min(base + workers, n); ++i)
            batch.push_back(std::async(std::launch::async, run_member, i));
        for (auto& f : batch) f.get();
    }

    AttractorReport rep;
    rep.members = members;
    bool all_ok = true;
    bool first = true;
    for (int i = 0; i < n; ++i) {
        if (!members[std::size_t(i)].ok) {
            all_ok = false;
            continue;
        }
        if (first) {
            rep.delta_ens = members[std::size_t(i)].final_min_gap;
            rep.alpha_ens = members[std::size_t(i)].alpha;
            first = false;
        } else {
            rep.delta_ens = std::min(rep.delta_ens, members[std::size_t(i)].final_min_gap);
            rep.alpha_ens = std::min(rep.alpha_ens, members[std::size_t(i)].alpha);
        }
    }
    if (!first)
        for (int i = 0; i < n; ++i)
            if (members[std::size_t(i)].ok)
                rep.c_ens = std::max(rep.c_ens, holder_c3_at(data[std::size_t(i)], rep.alpha_ens));
    rep.common_bound_ok = all_ok && rep.delta_ens > 0.0;
    return rep;
}

} // namespace nlch
