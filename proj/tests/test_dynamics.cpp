#include <cmath>
#include <cstdio>
#include <random>

#include "doctest.h"
#include "nlch/dynamics.hpp"
#include "nlch/errors.hpp"
#include "nlch/grid.hpp"
#include "nlch/io.hpp"
#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"

using namespace nlch;

namespace {

Field random_phi(const Domain& d, std::uint64_t seed, double sup) {
    Field f(d);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-sup, sup);
    for (double& x : f.v) x = uni(rng);
    return f;
}

// five-point symmetric table written to disk; the tests know its values and
// can evaluate convolutions and energies by literal summation
struct LiteralKernel {
    Domain domain;
    double h;
    std::vector<double> j; // offsets -2..2
    Kernel kernel;

    explicit LiteralKernel(const Domain& d)
        : domain(d), h(d.spacing(0)), j{0.5, 1.0, 2.0, 1.0, 0.5},
          kernel(make(d, h)) {}

    static Kernel make(const Domain& d, double h) {
        const Domain td = make_domain(1, {5.0 * h, 0, 0}, {5, 0, 0}, BoundaryMode::neumann);
        Field tab(td);
        tab.v = {0.5, 1.0, 2.0, 1.0, 0.5};
        write_field_f64("tab_five.f64", tab);
        char meta[128];
        std::snprintf(meta, sizeof meta, "{\"shape\": [5], \"spacing\": [%.17g]}", h);
        write_text_file("tab_five.f64.json", meta);
        return build_kernel(TabulatedKernelSpec{"tab_five.f64"}, d);
    }

    double conv_at(const Field& phi, long i) const {
        double s = 0.0;
        for (long k = -2; k <= 2; ++k) {
            const long jx = i + k;
            if (jx < 0 || jx >= domain.cells[0]) continue;
            s += j[std::size_t(k + 2)] * phi.v[std::size_t(jx)];
        }
        return s * h;
    }

    double a_at(long i) const {
        double s = 0.0;
        for (long k = -2; k <= 2; ++k) {
            const long jx = i + k;
            if (jx < 0 || jx >= domain.cells[0]) continue;
            s += j[std::size_t(k + 2)];
        }
        return s * h;
    }
};

} // namespace

TEST_SUITE("dynamics") {

TEST_CASE("both energy forms match literal lattice sums") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {16, 0, 0}, BoundaryMode::neumann);
    const LiteralKernel lk(d);
    const PotentialParams p;
    const Field phi = random_phi(d, 42, 0.9);

    double f_part = 0.0, quad = 0.0, pair = 0.0, self = 0.0;
    for (long i = 0; i < 16; ++i) {
        const double pi_ = phi.v[std::size_t(i)];
        f_part += eval_F(pi_, p) * lk.h;
        quad += lk.conv_at(phi, i) * pi_ * lk.h;
        self += lk.a_at(i) * pi_ * pi_ * lk.h;
        for (long k = -2; k <= 2; ++k) {
            const long jx = i + k;
            if (jx < 0 || jx >= 16) continue;
            const double diff = pi_ - phi.v[std::size_t(jx)];
            pair += lk.j[std::size_t(k + 2)] * diff * diff * lk.h * lk.h;
        }
    }
    const double form1 = f_part - 0.5 * quad;
    const double form2 = f_part + 0.25 * pair - 0.5 * self;

    const EnergySample e = energy(phi, lk.kernel, p);
    CHECK(e.energy_form1 == doctest::Approx(form1).epsilon(1e-12));
    CHECK(e.energy_form2 == doctest::Approx(form2).epsilon(1e-12));
    CHECK(std::abs(form1 - form2) <= 1e-10 * (1.0 + std::abs(form1)));
    CHECK(e.mass == doctest::Approx(mean(phi)));
    CHECK(e.min_gap == doctest::Approx(1.0 - norm_linf(phi)));
}

TEST_CASE("form identity holds for random fields and kernels") {
    const PotentialParams p;
    for (BoundaryMode bc : {BoundaryMode::neumann, BoundaryMode::periodic}) {
        const Domain d = make_domain(2, {1.0, 1.0, 0}, {20, 20, 0}, bc);
        const Kernel k = build_kernel(GaussianSpec{0.09, 1.0}, d);
        for (std::uint64_t s = 0; s < 5; ++s) {
            const Field phi = random_phi(d, 900 + s, 0.95);
            const EnergySample e = energy(phi, k, p);
            CHECK(std::abs(e.energy_form1 - e.energy_form2) <=
                  1e-10 * (1.0 + std::abs(e.energy_form1)));
        }
    }
}

TEST_CASE("chemical potential against a spike kernel") {
    // J* acts as the identity, so mu = F'(phi) - phi cell by cell
    const Domain d = make_domain(1, {1.0, 0, 0}, {32, 0, 0}, BoundaryMode::neumann);
    const double h = d.spacing(0);
    {
        FILE* f = std::fopen("tab_spike_dyn.f64", "wb");
        REQUIRE(f != nullptr);
        const double one_over_h = 1.0 / h;
        REQUIRE(std::fwrite(&one_over_h, sizeof(double), 1, f) == 1);
        std::fclose(f);
    }
    char meta[128];
    std::snprintf(meta, sizeof meta, "{\"shape\": [1], \"spacing\": [%.17g]}", h);
    write_text_file("tab_spike_dyn.f64.json", meta);
    const Kernel k = build_kernel(TabulatedKernelSpec{"tab_spike_dyn.f64"}, d);

    const PotentialParams p;
    const Field phi = random_phi(d, 7, 0.9);
    const Field mu = chemical_potential(phi, k, p);
    for (long i = 0; i < 32; ++i)
        CHECK(mu.v[std::size_t(i)] ==
              doctest::Approx(eval_dF(phi.v[std::size_t(i)], p) - phi.v[std::size_t(i)])
                  .epsilon(1e-11));
}

TEST_CASE("one implicit step satisfies its own equation") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {32, 0, 0}, BoundaryMode::neumann);
    const Kernel k = build_kernel(GaussianSpec{0.1, 1.0}, d);
    const PotentialParams p;
    const double dt = 1e-3;

    SimState st = make_state(random_phi(d, 5, 0.8), p);
    const Field phi0 = st.phi;
    const SimState next = step(st, dt, k, p, SolverConfig{});

    const Field conv0 = k.convolve(phi0, conv_mode_for(d));
    Field df(d);
    for (std::size_t i = 0; i < df.v.size(); ++i) df.v[i] = eval_dF(next.phi.v[i], p);
    const Field lap_df = laplacian(df);
    const Field lap_cv = laplacian(conv0);
    double rmax = 0.0;
    for (std::size_t i = 0; i < df.v.size(); ++i) {
        const double r = next.phi.v[i] - dt * lap_df.v[i] - (phi0.v[i] - dt * lap_cv.v[i]);
        rmax = std::max(rmax, std::abs(r));
    }
    CHECK(rmax <= 1e-8);
    CHECK(mean(next.phi) == doctest::Approx(mean(phi0)).epsilon(1e-13));
    CHECK(norm_linf(next.phi) < 1.0);
}

TEST_CASE("constants are steady states on periodic domains") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {24, 0, 0}, BoundaryMode::periodic);
    const Kernel k = build_kernel(GaussianSpec{0.1, 1.0}, d);
    const PotentialParams p;
    const Trajectory tr = simulate(Field(d, 0.3), p, k, 1e-3, 5e-3, 1, SolverConfig{});
    REQUIRE(tr.series.size() == 6);
    for (const Field& snap : tr.snapshots)
        for (double v : snap.v) CHECK(v == doctest::Approx(0.3).epsilon(1e-10));
    CHECK(tr.series.back().min_gap == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(tr.series.back().l2_dtphi <= 1e-8);
}

TEST_CASE("short transient: bookkeeping, mass, bound, dissipation") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {64, 0, 0}, BoundaryMode::neumann);
    const Kernel k = build_kernel(GaussianSpec{0.08, 1.0}, d);
    const PotentialParams p;
    Field phi0(d);
    for (long i = 0; i < 64; ++i)
        phi0.v[std::size_t(i)] = 0.8 * std::sin(2.0 * M_PI * cell_center(d, 0, i));

    const Trajectory tr = simulate(phi0, p, k, 1e-3, 0.05, 10, SolverConfig{});
    CHECK(tr.series.size() == 51);                      // floor(t_end/dt) + 1 rows
    CHECK(tr.snapshots.size() == 6);                    // steps 0,10,20,30,40,50
    CHECK(tr.snapshot_steps.back() == 50);
    CHECK(tr.series.front().l2_dtphi == 0.0);

    const double e0 = tr.series.front().energy_form1;
    const double mass0 = tr.series.front().mass;
    double prev = e0;
    for (const SeriesRow& row : tr.series) {
        CHECK(row.energy_form1 <= prev + 1e-9 * (1.0 + std::abs(e0)));
        CHECK(std::abs(row.energy_form1 - row.energy_form2) <=
              1e-10 * (1.0 + std::abs(row.energy_form1)));
        CHECK(row.sup_abs_phi < 1.0);
        CHECK(row.min_gap > 0.0);
        CHECK(std::abs(row.mass - mass0) <= 1e-12);
        prev = row.energy_form1;
    }
    // it actually moved
    CHECK(tr.series.back().energy_form1 < e0);
}

TEST_CASE("deterministic reruns") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {32, 0, 0}, BoundaryMode::neumann);
    const Kernel k = build_kernel(GaussianSpec{0.1, 1.0}, d);
    const PotentialParams p;
    const Field phi0 = random_phi(d, 77, 0.85);
    const Trajectory a = simulate(phi0, p, k, 1e-3, 0.01, 5, SolverConfig{});
    const Trajectory b = simulate(phi0, p, k, 1e-3, 0.01, 5, SolverConfig{});
    REQUIRE(a.series.size() == b.series.size());
    for (std::size_t i = 0; i < a.series.size(); ++i) {
        CHECK(a.series[i].energy_form1 == b.series[i].energy_form1);
        CHECK(a.series[i].sup_abs_phi == b.series[i].sup_abs_phi);
    }
    for (std::size_t i = 0; i < a.snapshots.size(); ++i)
        CHECK(a.snapshots[i].v == b.snapshots[i].v);
}

TEST_CASE("state admission") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {8, 0, 0}, BoundaryMode::neumann);
    const PotentialParams p;
    CHECK_THROWS_AS(make_state(Field(d, -1.2), p), ValidationError); // outside [-1, 1]

    // a pure phase is admitted: the clamp acts first, and the mean check runs
    // on the clamped values
    const SimState pure = make_state(Field(d, 1.0), p);
    CHECK(mean(pure.phi) == doctest::Approx(1.0 - 1e-12));

    Field touching(d, 0.0);
    touching.v[3] = 1.0; // exactly at the endpoint: pulled inside
    const SimState st = make_state(touching, p);
    CHECK(norm_linf(st.phi) < 1.0);
    CHECK(norm_linf(st.phi) == doctest::Approx(1.0 - 1e-12));
}

TEST_CASE("simulate validates its arguments") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {8, 0, 0}, BoundaryMode::neumann);
    const Kernel k = build_kernel(GaussianSpec{0.1, 1.0}, d);
    const PotentialParams p;
    CHECK_THROWS_AS(simulate(Field(d, 0.2), p, k, -1e-3, 0.01, 1, SolverConfig{}),
                    ValidationError);
    CHECK_THROWS_AS(simulate(Field(d, 0.2), p, k, 1e-3, 0.01, 0, SolverConfig{}),
                    ValidationError);
}

} // TEST_SUITE
