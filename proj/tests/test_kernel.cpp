#include <cmath>
#include <random>

#include "doctest.h"
#include "nlch/errors.hpp"
#include "nlch/grid.hpp"
#include "nlch/io.hpp"
#include "nlch/kernel.hpp"

using namespace nlch;

namespace {

Field random_field(const Domain& d, std::uint64_t seed, double sup = 1.0) {
    Field f(d);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-sup, sup);
    for (double& x : f.v) x = uni(rng);
    return f;
}

double rel_linf(const Field& a, const Field& b) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) {
        num = std::max(num, std::abs(a.v[i] - b.v[i]));
        den = std::max(den, std::abs(b.v[i]));
    }
    return num / std::max(den, 1e-300);
}

void write_doubles(const std::string& path, const std::vector<double>& values) {
    FILE* f = std::fopen(path.c_str(), "wb");
    REQUIRE(f != nullptr);
    REQUIRE(std::fwrite(values.data(), sizeof(double), values.size(), f) == values.size());
    std::fclose(f);
}

} // namespace

TEST_SUITE("kernel") {

TEST_CASE("gaussian mass on a resolved lattice") {
    // sigma/h >> 1 and all mass inside the difference lattice: the cell sum
    // reproduces the amplitude to spectral accuracy
    const Domain d = make_domain(1, {1.0, 0, 0}, {128, 0, 0}, BoundaryMode::neumann);
    const Kernel k = build_kernel(GaussianSpec{0.05, 1.0}, d);
    CHECK(k.l1_j() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(k.m1() > 0.0);
    CHECK(std::isfinite(k.l1_grad_j()));

    const Kernel k2 = build_kernel(GaussianSpec{0.05, 2.5}, d);
    CHECK(k2.l1_j() == doctest::Approx(2.5).epsilon(1e-6));
}

TEST_CASE("compact bump closed-form ball norms") {
    // J(r) = A (1 - (r/r0)^2)^2 on r <= r0: integral 16 A r0 / 15, total
    // variation 2 A in one dimension
    const double A = 1.3, r0 = 0.25;
    const Domain d = make_domain(1, {1.0, 0, 0}, {512, 0, 0}, BoundaryMode::neumann);
    const Kernel k = build_kernel(CompactBumpSpec{r0, A}, d);
    CHECK(k.l1_j() == doctest::Approx(16.0 * A * r0 / 15.0).epsilon(1e-4));
    CHECK(k.l1_grad_j() == doctest::Approx(2.0 * A).epsilon(1e-3));
    CHECK(k.m1() >= r0 - 1e-12);
}

TEST_CASE("tabulated spike kernel acts as the identity") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {32, 0, 0}, BoundaryMode::neumann);
    const double h = d.spacing(0);
    write_doubles("tab_spike.f64", {1.0 / h});
    write_text_file("tab_spike.f64.json",
                    "{\"shape\": [1], \"spacing\": [" + std::to_string(h) + "]}");

    const Kernel k = build_kernel(TabulatedKernelSpec{"tab_spike.f64"}, d);
    const Field phi = random_field(d, 11);
    for (ConvPath path : {ConvPath::fft, ConvPath::direct}) {
        const Field out = k.convolve(phi, ConvMode::truncated, path);
        CHECK(rel_linf(out, phi) <= 1e-12);
    }
}

TEST_CASE("tabulated kernel rejects malformed tables") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {32, 0, 0}, BoundaryMode::neumann);
    CHECK_THROWS_AS(build_kernel(TabulatedKernelSpec{"no_such_table.f64"}, d),
                    ValidationError);
    const double h = d.spacing(0);
    write_doubles("tab_even.f64", {0.3, 0.3});
    write_text_file("tab_even.f64.json",
                    "{\"shape\": [2], \"spacing\": [" + std::to_string(h) + "]}");
    CHECK_THROWS_AS(build_kernel(TabulatedKernelSpec{"tab_even.f64"}, d), ValidationError);
}

TEST_CASE("kernel spec validation") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {16, 0, 0}, BoundaryMode::neumann);
    CHECK_THROWS_AS(build_kernel(GaussianSpec{-0.1, 1.0}, d), ValidationError);
    CHECK_THROWS_AS(build_kernel(CompactBumpSpec{0.25, 0.0}, d), ValidationError);
}

TEST_CASE("fft and direct quadrature agree") {
    const Domain d1 = make_domain(1, {1.0, 0, 0}, {48, 0, 0}, BoundaryMode::neumann);
    const Domain d2 = make_domain(2, {1.0, 1.0, 0}, {24, 24, 0}, BoundaryMode::neumann);
    int checked = 0;
    for (const Domain* d : {&d1, &d2}) {
        const Kernel k = build_kernel(GaussianSpec{0.08, 1.0}, *d);
        const Field phi = random_field(*d, 23 + checked);
        for (ConvMode mode : {ConvMode::truncated, ConvMode::periodic_wrap}) {
            const Field f = k.convolve(phi, mode, ConvPath::fft);
            const Field g = k.convolve(phi, mode, ConvPath::direct);
            CHECK(rel_linf(f, g) <= 1e-12);
            ++checked;
        }
    }
    CHECK(checked == 4);
}

TEST_CASE("convolution is linear and self-adjoint") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {40, 0, 0}, BoundaryMode::neumann);
    const Kernel k = build_kernel(GaussianSpec{0.1, 1.0}, d);
    const Field phi = random_field(d, 3), psi = random_field(d, 5);

    Field comb(d);
    for (std::size_t i = 0; i < comb.v.size(); ++i)
        comb.v[i] = 2.0 * phi.v[i] - 0.3 * psi.v[i];
    const Field jc = k.convolve(comb);
    const Field jp = k.convolve(phi), jq = k.convolve(psi);
    Field lin(d);
    for (std::size_t i = 0; i < lin.v.size(); ++i) lin.v[i] = 2.0 * jp.v[i] - 0.3 * jq.v[i];
    CHECK(rel_linf(jc, lin) <= 1e-12);

    // even kernels with zero extension are symmetric operators
    const double a = inner(jp, psi), b = inner(phi, jq);
    CHECK(std::abs(a - b) <= 1e-10 * (1.0 + std::abs(a)));
}

TEST_CASE("ball norms dominate the convolutions") {
    const Domain d = make_domain(2, {1.0, 1.0, 0}, {32, 32, 0}, BoundaryMode::neumann);
    const Kernel k = build_kernel(GaussianSpec{0.07, 1.0}, d);
    const double slack = 1.0 + 1e-12;
    for (std::uint64_t s = 0; s < 10; ++s) {
        const Field phi = random_field(d, 100 + s);
        CHECK(norm_linf(k.convolve(phi)) <= k.l1_j() * slack);
        for (const Field& comp : k.grad_convolve(phi))
            CHECK(norm_linf(comp) <= k.l1_grad_j() * slack);
    }
}

TEST_CASE("self-interaction saturates away from the boundary") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {64, 0, 0}, BoundaryMode::neumann);
    const Kernel k = build_kernel(CompactBumpSpec{0.2, 1.0}, d);
    const Field& a = k.self_interaction();
    double interior_min = 1e300;
    for (long i = 0; i < 64; ++i) {
        CHECK(a.v[std::size_t(i)] <= k.l1_j() * (1.0 + 1e-12));
        const double x = cell_center(d, 0, i);
        if (x > 0.25 && x < 0.75) interior_min = std::min(interior_min, a.v[std::size_t(i)]);
    }
    CHECK(interior_min == doctest::Approx(k.l1_j()).epsilon(1e-12));
    // zero extension loses mass at the edge
    CHECK(a.v[0] < 0.8 * k.l1_j());
}

} // TEST_SUITE
