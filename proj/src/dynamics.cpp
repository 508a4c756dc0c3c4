#include "nlch/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "nlch/log.hpp"

namespace nlch {

ConvMode conv_mode_for(const Domain& d) {
    return d.bc == BoundaryMode::periodic ? ConvMode::periodic_wrap : ConvMode::truncated;
}

Field chemical_potential(const Field& phi, const Kernel& k, const PotentialParams& p) {
    if (!(norm_linf(phi) < 1.0))
        throw ValidationError("chemical_potential: sup|phi| >= 1, state left the physical interval");
    Field mu = k.convolve(phi, conv_mode_for(phi.domain));
    for (size_t i = 0; i < mu.v.size(); ++i) mu.v[i] = eval_dF(phi.v[i], p) - mu.v[i];
    return mu;
}

EnergySample energy_from(const Field& phi, const Field& conv, const Field& a,
                         const PotentialParams& p, double time) {
    const double w = phi.domain.cell_volume();
    double f_sum = 0.0, jphi_phi = 0.0, aphi_phi = 0.0;
    for (size_t i = 0; i < phi.v.size(); ++i) {
        f_sum += eval_F(phi.v[i], p);
        jphi_phi += conv.v[i] * phi.v[i];
        aphi_phi += a.v[i] * phi.v[i] * phi.v[i];
    }
    f_sum *= w;
    jphi_phi *= w;
    aphi_phi *= w;

    EnergySample e;
    e.time = time;
    e.energy_form1 = f_sum - 0.5 * jphi_phi;
    // pair-difference route: the double sum (1/4) sum_ij J (phi_i - phi_j)^2
    // expands to <a phi, phi>/2 - <J*phi, phi>/2 on the lattice
    const double pair_diff = 0.5 * aphi_phi - 0.5 * jphi_phi;
    e.energy_form2 = pair_diff + (f_sum - 0.5 * aphi_phi);
    e.mass = mean(phi);
    e.sup_abs_phi = norm_linf(phi);
    e.min_gap = 1.0 - e.sup_abs_phi;
    return e;
}

EnergySample energy(const Field& phi, const Kernel& k, const PotentialParams& p, double time) {
    const ConvMode mode = conv_mode_for(phi.domain);
    Field conv = k.convolve(phi, mode);
    if (mode == ConvMode::truncated) return energy_from(phi, conv, k.self_interaction(), p, time);
    Field ones(phi.domain, 1.0);
    Field a = k.convolve(ones, mode);
    return energy_from(phi, conv, a, p, time);
}

SimState make_state(Field phi0, const PotentialParams& p) {
    validate(p);
    const double rim = 1.0 - 1e-12;
    for (double& v : phi0.v) {
        if (!std::isfinite(v)) throw ValidationError("phi0 contains non-finite values");
        if (std::fabs(v) > 1.0)
            throw ValidationError("phi0 must satisfy sup|phi0| <= 1");
        if (v > rim) v = rim;
        if (v < -rim) v = -rim;
    }
    const double m = mean(phi0);
    if (!(std::fabs(m) < 1.0))
        throw ValidationError("phi0 mean is inadmissible: |mean| must be < 1");
    SimState st;
    st.mu = Field(phi0.domain);
    st.phi = std::move(phi0);
    return st;
}

Stepper::Stepper(const Kernel& k, const PotentialParams& p, SolverConfig cfg)
    : ker_(k), pot_(p), cfg_(cfg), mode_(conv_mode_for(k.domain())),
      conv_(k.domain()), a_(k.domain()), lapdiag_(k.domain()), rhs_(k.domain()), x_(k.domain()),
      g_(k.domain()), dfx_(k.domain()), ddfx_(k.domain()), lapbuf_(k.domain()), w_(k.domain()),
      r_(k.domain()), z_(k.domain()), p_(k.domain()), q_(k.domain()), s_(k.domain()),
      wprev_(k.domain()) {
    validate(p);
    if (!(cfg_.newton_tol > 0) || !(cfg_.cg_tol > 0) || cfg_.newton_max_iter < 1 ||
        cfg_.cg_max_iter < 1 || cfg_.max_halvings < 0)
        throw ValidationError("solver: tolerances must be positive and iteration caps >= 1");

    // diagonal of -Lap in flux form: 2/h^2 per axis away from walls, 1/h^2 on
    // a Neumann wall (one face only)
    const Domain& d = k.domain();
    const auto st = d.strides();
    for (int a = 0; a < d.dim; ++a) {
        const double inv_h2 = 1.0 / (d.spacing(a) * d.spacing(a));
        const long nA = d.cells[size_t(a)];
        for (long i = 0; i < d.cell_count(); ++i) {
            const long ia = (i / st[size_t(a)]) % nA;
            const bool wall = d.bc == BoundaryMode::neumann && (ia == 0 || ia == nA - 1);
            lapdiag_.v[size_t(i)] += (wall ? 1.0 : 2.0) * inv_h2;
        }
    }
}

void Stepper::refresh_conv(const Field& phi) { ker_.convolve_into(phi, conv_, mode_); }

void Stepper::reset(SimState& st) {
    if (!(st.phi.domain == ker_.domain()))
        throw ValidationError("stepper: state domain differs from the kernel's");
    refresh_conv(st.phi);
    if (mode_ == ConvMode::truncated) {
        a_ = ker_.self_interaction();
    } else {
        Field ones(ker_.domain(), 1.0);
        ker_.convolve_into(ones, a_, mode_);
    }
    st.mu = conv_;
    for (size_t i = 0; i < st.mu.v.size(); ++i)
        st.mu.v[i] = eval_dF(st.phi.v[i], pot_) - st.mu.v[i];
    wprev_valid_ = false;
    bound_ = true;
}

// one implicit solve at fixed dt; throws StepFailure when Newton or the
// inner CG cannot reach tolerance
void Stepper::implicit_solve(const Field& phi_n, double dt, Field& out, StepStats& stats) {
    const size_t N = phi_n.v.size();
    laplacian_into(conv_, lapbuf_);
    for (size_t i = 0; i < N; ++i) rhs_.v[i] = phi_n.v[i] - dt * lapbuf_.v[i];

    x_ = phi_n;
    double res = 0.0;
    for (int newton = 0;; ++newton) {
        for (size_t i = 0; i < N; ++i) {
            dfx_.v[i] = eval_dF(x_.v[i], pot_);
            ddfx_.v[i] = eval_ddF(x_.v[i], pot_);
        }
        laplacian_into(dfx_, lapbuf_);
        for (size_t i = 0; i < N; ++i) g_.v[i] = x_.v[i] - dt * lapbuf_.v[i] - rhs_.v[i];
        res = norm_l2(g_);
        if (res <= cfg_.newton_tol) break;
        if (newton >= cfg_.newton_max_iter)
            throw StepFailure("newton: no convergence within the iteration cap", res);

        // solve (diag(1/F'') - dt Lap) w = -g by preconditioned CG, then the
        // Newton update is s = w / F''; the exact update has zero mean, so the
        // projection below only removes linear-solver noise
        double b2 = 0.0;
        for (size_t i = 0; i < N; ++i) b2 += g_.v[i] * g_.v[i];
        const double bnorm = std::sqrt(b2);

        auto apply_m = [&](const Field& in, Field& mout) {
            laplacian_into(in, mout);
            for (size_t i = 0; i < N; ++i) mout.v[i] = in.v[i] / ddfx_.v[i] - dt * mout.v[i];
        };

        // warm start from the previous step's solution when it helps
        std::fill(w_.v.begin(), w_.v.end(), 0.0);
        for (size_t i = 0; i < N; ++i) r_.v[i] = -g_.v[i];
        if (wprev_valid_) {
            apply_m(wprev_, q_);
            double r2w = 0.0;
            for (size_t i = 0; i < N; ++i) {
                const double ri = -g_.v[i] - q_.v[i];
                r2w += ri * ri;
            }
            if (r2w < b2) {
                w_ = wprev_;
                for (size_t i = 0; i < N; ++i) r_.v[i] = -g_.v[i] - q_.v[i];
            }
        }

        bool cg_done = false;
        long it = 0;
        double rz = 0.0;
        for (size_t i = 0; i < N; ++i) {
            z_.v[i] = r_.v[i] / (1.0 / ddfx_.v[i] + dt * lapdiag_.v[i]);
            rz += r_.v[i] * z_.v[i];
        }
        p_ = z_;
        for (; it < cfg_.cg_max_iter; ++it) {
            double r2 = 0.0;
            for (size_t i = 0; i < N; ++i) r2 += r_.v[i] * r_.v[i];
            if (std::sqrt(r2) <= cfg_.cg_tol * bnorm) {
                cg_done = true;
                break;
            }
            apply_m(p_, q_);
            double pq = 0.0;
            for (size_t i = 0; i < N; ++i) pq += p_.v[i] * q_.v[i];
            const double alpha = rz / pq;
            for (size_t i = 0; i < N; ++i) {
                w_.v[i] += alpha * p_.v[i];
                r_.v[i] -= alpha * q_.v[i];
            }
            double rz_new = 0.0;
            for (size_t i = 0; i < N; ++i) {
                z_.v[i] = r_.v[i] / (1.0 / ddfx_.v[i] + dt * lapdiag_.v[i]);
                rz_new += r_.v[i] * z_.v[i];
            }
            const double beta = rz_new / rz;
            rz = rz_new;
            for (size_t i = 0; i < N; ++i) p_.v[i] = z_.v[i] + beta * p_.v[i];
        }
        stats.cg_iters += it;
        if (!cg_done) throw StepFailure("cg: no convergence within the iteration cap", res);
        wprev_ = w_;
        wprev_valid_ = true;

        for (size_t i = 0; i < N; ++i) s_.v[i] = w_.v[i] / ddfx_.v[i];
        const double smean = mean(s_);
        for (size_t i = 0; i < N; ++i) s_.v[i] -= smean;

        // barrier line search: shrink until the iterate stays inside (-1,1)
        double t = 1.0;
        for (;;) {
            double worst = 0.0;
            for (size_t i = 0; i < N; ++i)
                worst = std::max(worst, std::fabs(x_.v[i] + t * s_.v[i]));
            if (worst < 1.0 - 1e-14) break;
            t *= 0.5;
            if (t < 1e-18)
                throw StepFailure("newton: line search cannot keep the iterate in (-1,1)", res);
        }
        for (size_t i = 0; i < N; ++i) x_.v[i] += t * s_.v[i];
        stats.newton_iters += 1;
    }
    stats.residual = res;
    out = x_;
}

void Stepper::advance_field(Field& phi, double dt, int depth, StepStats& stats) {
    try {
        implicit_solve(phi, dt, x_, stats);
        phi = x_;
        refresh_conv(phi);
    } catch (const StepFailure& f) {
        if (depth >= cfg_.max_halvings) throw;
        logf(LogLevel::info, "step: splitting dt=%g after failure (%s), depth %d", dt, f.what(),
             depth + 1);
        stats.halvings += 1;
        wprev_valid_ = false;
        advance_field(phi, 0.5 * dt, depth + 1, stats);
        advance_field(phi, 0.5 * dt, depth + 1, stats);
    }
}

StepStats Stepper::advance(SimState& st, double dt) {
    if (!(dt > 0.0)) throw ValidationError("step: dt must be positive");
    if (!bound_) reset(st);
    StepStats stats;
    advance_field(st.phi, dt, 0, stats);
    if (!(norm_linf(st.phi) < 1.0))
        throw StepFailure("step: iterate reached the endpoints", norm_linf(st.phi));
    st.mu = conv_;
    for (size_t i = 0; i < st.mu.v.size(); ++i)
        st.mu.v[i] = eval_dF(st.phi.v[i], pot_) - st.mu.v[i];
    st.time += dt;
    st.step_index += 1;
    return stats;
}

SimState step(const SimState& state, double dt, const Kernel& k, const PotentialParams& p,
              const SolverConfig& cfg) {
    SimState st;
    st.phi = state.phi;
    st.mu = state.mu.v.empty() ? Field(state.phi.domain) : state.mu;
    st.time = state.time;
    st.step_index = state.step_index;
    Stepper stepper(k, p, cfg);
    stepper.reset(st);
    stepper.advance(st, dt);
    return st;
}

Trajectory simulate(const Field& phi0, const PotentialParams& pot, const Kernel& ker, double dt,
                    double t_end, long snapshot_every, const SolverConfig& solver) {
    if (!(dt > 0.0)) throw ValidationError("simulate: dt must be positive");
    if (t_end < 0.0) throw ValidationError("simulate: t_end must be >= 0");
    if (snapshot_every < 1) throw ValidationError("simulate: snapshot_every must be >= 1");
    if (!(phi0.domain == ker.domain()))
        throw ValidationError("simulate: phi0 domain differs from the kernel's");

    SimState st = make_state(phi0, pot);
    Stepper stepper(ker, pot, solver);
    stepper.reset(st);

    const long n_steps = long(std::floor(t_end / dt + 1e-9));
    Trajectory traj;
    traj.domain = phi0.domain;

    Field prev = st.phi;
    auto emit_row = [&](double l2_dtphi) {
        const EnergySample e =
            energy_from(st.phi, stepper.last_conv(), stepper.mode_self_interaction(), pot, st.time);
        SeriesRow row;
        row.time = st.time;
        row.energy_form1 = e.energy_form1;
        row.energy_form2 = e.energy_form2;
        row.mass = e.mass;
        row.sup_abs_phi = e.sup_abs_phi;
        row.min_gap = e.min_gap;
        row.l2_mu = norm_l2(st.mu);
        row.h1_mu = norm_h1(st.mu);
        row.l2_dtphi = l2_dtphi;
        traj.series.push_back(row);
    };
    auto emit_snapshot = [&]() {
        traj.snapshot_times.push_back(st.time);
        traj.snapshot_steps.push_back(st.step_index);
        traj.snapshots.push_back(st.phi);
    };

    emit_row(0.0);
    emit_snapshot();
    long total_cg = 0, total_newton = 0;
    for (long k = 1; k <= n_steps; ++k) {
        prev = st.phi;
        const StepStats stats = stepper.advance(st, dt);
        st.time = double(k) * dt; // pin the nominal grid; advance adds dt with rounding
        st.step_index = k;
        total_cg += stats.cg_iters;
        total_newton += stats.newton_iters;
        double diff2 = 0.0;
        for (size_t i = 0; i < prev.v.size(); ++i) {
            const double d = st.phi.v[i] - prev.v[i];
            diff2 += d * d;
        }
        emit_row(std::sqrt(diff2 * st.phi.domain.cell_volume()) / dt);
        if (k % snapshot_every == 0 || k == n_steps) emit_snapshot();
    }
    logf(LogLevel::info, "simulate: %ld steps, %ld newton iterations, %ld cg iterations",
         n_steps, total_newton, total_cg);
    return traj;
}

} // namespace nlch
