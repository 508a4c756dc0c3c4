#include "nlch/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <numbers>

#include "json.hpp"

namespace nlch {

namespace {

// FFTW's planner mutates global state; plan creation and destruction must be
// serialized process-wide. Executing finished plans is safe concurrently.
std::mutex& planner_mutex() {
    static std::mutex mu;
    return mu;
}

struct FftwPlanDeleter {
    void operator()(fftw_plan p) const {
        if (p) {
            std::lock_guard<std::mutex> lk(planner_mutex());
            fftw_destroy_plan(p);
        }
    }
};

} // namespace

// Per-semantics transform state: padded sizes, scratch buffers, plans, and
// the kernel spectra. Built lazily under the cache mutex.
struct ModeFft {
    std::array<long, 3> M{1, 1, 1};
    long nreal = 0;
    long ncplx = 0;
    double* rbuf = nullptr;
    fftw_complex* cbuf = nullptr;
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
    std::vector<double> kspec;                   // interleaved re,im, size 2*ncplx
    std::array<std::vector<double>, 3> gspec;
    bool grad_ready = false;

    ~ModeFft() {
        if (fwd || inv) {
            std::lock_guard<std::mutex> lk(planner_mutex());
            if (fwd) fftw_destroy_plan(fwd);
            if (inv) fftw_destroy_plan(inv);
        }
        if (rbuf) fftw_free(rbuf);
        if (cbuf) fftw_free(cbuf);
    }
};

struct Kernel::Cache {
    std::mutex mu;
    std::unique_ptr<ModeFft> modes[2]; // indexed by ConvMode
    std::unique_ptr<Field> a;          // self-interaction, truncated semantics
};

Kernel::Kernel() : cache_(new Cache) {}
Kernel::Kernel(Kernel&&) noexcept = default;
Kernel& Kernel::operator=(Kernel&&) noexcept = default;
Kernel::~Kernel() = default;

long Kernel::diff_index(std::array<long, 3> k) const {
    const long s1 = 2 * half_[1] + 1;
    const long s2 = 2 * half_[2] + 1;
    return ((k[0] + half_[0]) * s1 + (k[1] + half_[1])) * s2 + (k[2] + half_[2]);
}

double Kernel::sample(std::array<long, 3> k) const {
    for (int a = 0; a < 3; ++a)
        if (std::labs(k[size_t(a)]) > half_[size_t(a)])
            throw ValidationError("kernel: sample index outside the difference lattice");
    return j_[size_t(diff_index(k))];
}

std::array<double, 3> Kernel::grad_sample(std::array<long, 3> k) const {
    for (int a = 0; a < 3; ++a)
        if (std::labs(k[size_t(a)]) > half_[size_t(a)])
            throw ValidationError("kernel: sample index outside the difference lattice");
    const long i = diff_index(k);
    std::array<double, 3> g{0, 0, 0};
    for (int a = 0; a < dom_.dim; ++a) g[size_t(a)] = grad_[size_t(a)][size_t(i)];
    return g;
}

namespace {

// transform of one sample table, laid into the grid of the given mode:
// negative offsets wrap to the top in truncated (zero-padded) mode, and in
// wrap mode every alias k = m (mod n) folds onto the same slot
void spectrum_of(ModeFft& mf, const std::vector<double>& samples, std::array<long, 3> half,
                 std::vector<double>& out) {
    std::fill(mf.rbuf, mf.rbuf + mf.nreal, 0.0);
    const std::array<long, 3>& Mv = mf.M;
    for (long k0 = -half[0]; k0 <= half[0]; ++k0)
        for (long k1 = -half[1]; k1 <= half[1]; ++k1)
            for (long k2 = -half[2]; k2 <= half[2]; ++k2) {
                const long s1 = 2 * half[1] + 1, s2 = 2 * half[2] + 1;
                const long di = ((k0 + half[0]) * s1 + (k1 + half[1])) * s2 + (k2 + half[2]);
                const long p0 = ((k0 % Mv[0]) + Mv[0]) % Mv[0];
                const long p1 = ((k1 % Mv[1]) + Mv[1]) % Mv[1];
                const long p2 = ((k2 % Mv[2]) + Mv[2]) % Mv[2];
                mf.rbuf[(p0 * Mv[1] + p1) * Mv[2] + p2] += samples[size_t(di)];
            }
    fftw_execute(mf.fwd);
    out.resize(size_t(2 * mf.ncplx));
    for (long i = 0; i < mf.ncplx; ++i) {
        out[size_t(2 * i)] = mf.cbuf[i][0];
        out[size_t(2 * i) + 1] = mf.cbuf[i][1];
    }
}

void ensure_mode(const Domain& dom, const std::vector<double>& samples, std::array<long, 3> half,
                 std::unique_ptr<ModeFft>& slot, ConvMode mode) {
    if (slot) return;
    auto mf = std::make_unique<ModeFft>();
    const int rank = dom.dim;
    for (int a = 0; a < rank; ++a)
        mf->M[size_t(a)] = mode == ConvMode::truncated ? 2 * dom.cells[size_t(a)]
                                                       : dom.cells[size_t(a)];
    mf->nreal = mf->M[0] * mf->M[1] * mf->M[2];
    mf->ncplx = 1;
    for (int a = 0; a < rank - 1; ++a) mf->ncplx *= mf->M[size_t(a)];
    mf->ncplx *= mf->M[size_t(rank - 1)] / 2 + 1;

    mf->rbuf = fftw_alloc_real(size_t(mf->nreal));
    mf->cbuf = fftw_alloc_complex(size_t(mf->ncplx));
    int sizes[3];
    for (int a = 0; a < rank; ++a) sizes[a] = int(mf->M[size_t(a)]);
    {
        std::lock_guard<std::mutex> lk(planner_mutex());
        mf->fwd = fftw_plan_dft_r2c(rank, sizes, mf->rbuf, mf->cbuf, FFTW_ESTIMATE);
        mf->inv = fftw_plan_dft_c2r(rank, sizes, mf->cbuf, mf->rbuf, FFTW_ESTIMATE);
    }
    if (!mf->fwd || !mf->inv) throw ValidationError("kernel: transform planning failed");
    spectrum_of(*mf, samples, half, mf->kspec);
    slot = std::move(mf);
}

// one transform round trip: out = idft(dft(phi) * spec) * cellvol / nreal
void fft_apply(ModeFft& mf, const std::vector<double>& spec, const Field& phi, Field& out) {
    const Domain& d = phi.domain;
    const long n0 = d.cells[0], n1 = d.cells[1], n2 = d.cells[2];
    const std::array<long, 3>& Mv = mf.M;
    std::fill(mf.rbuf, mf.rbuf + mf.nreal, 0.0);
    for (long i0 = 0; i0 < n0; ++i0)
        for (long i1 = 0; i1 < n1; ++i1)
            for (long i2 = 0; i2 < n2; ++i2)
                mf.rbuf[(i0 * Mv[1] + i1) * Mv[2] + i2] = phi.v[size_t((i0 * n1 + i1) * n2 + i2)];
    fftw_execute(mf.fwd);
    for (long i = 0; i < mf.ncplx; ++i) {
        const double ar = mf.cbuf[i][0], ai = mf.cbuf[i][1];
        const double br = spec[size_t(2 * i)], bi = spec[size_t(2 * i) + 1];
        mf.cbuf[i][0] = ar * br - ai * bi;
        mf.cbuf[i][1] = ar * bi + ai * br;
    }
    fftw_execute(mf.inv);
    const double scale = d.cell_volume() / double(mf.nreal);
    for (long i0 = 0; i0 < n0; ++i0)
        for (long i1 = 0; i1 < n1; ++i1)
            for (long i2 = 0; i2 < n2; ++i2)
                out.v[size_t((i0 * n1 + i1) * n2 + i2)] =
                    mf.rbuf[(i0 * Mv[1] + i1) * Mv[2] + i2] * scale;
}

} // namespace

// literal lattice sum, deliberately independent of the transform route so the
// two can cross-check each other
void Kernel::direct_convolve(const std::vector<double>& tab, const Field& phi, Field& out,
                             ConvMode mode) const {
    const long n0 = dom_.cells[0], n1 = dom_.cells[1], n2 = dom_.cells[2];
    const double w = dom_.cell_volume();
    const bool wrapped = mode == ConvMode::periodic_wrap;
    const long s1 = 2 * half_[1] + 1, s2 = 2 * half_[2] + 1;
    for (long i0 = 0; i0 < n0; ++i0)
        for (long i1 = 0; i1 < n1; ++i1)
            for (long i2 = 0; i2 < n2; ++i2) {
                double acc = 0.0;
                for (long k0 = -half_[0]; k0 <= half_[0]; ++k0) {
                    long j0 = i0 - k0;
                    if (wrapped) j0 = ((j0 % n0) + n0) % n0;
                    else if (j0 < 0 || j0 >= n0) continue;
                    for (long k1 = -half_[1]; k1 <= half_[1]; ++k1) {
                        long j1 = i1 - k1;
                        if (wrapped) j1 = ((j1 % n1) + n1) % n1;
                        else if (j1 < 0 || j1 >= n1) continue;
                        for (long k2 = -half_[2]; k2 <= half_[2]; ++k2) {
                            long j2 = i2 - k2;
                            if (wrapped) j2 = ((j2 % n2) + n2) % n2;
                            else if (j2 < 0 || j2 >= n2) continue;
                            const long di =
                                ((k0 + half_[0]) * s1 + (k1 + half_[1])) * s2 + (k2 + half_[2]);
                            acc += tab[size_t(di)] * phi.v[size_t((j0 * n1 + j1) * n2 + j2)];
                        }
                    }
                }
                out.v[size_t((i0 * n1 + i1) * n2 + i2)] = acc * w;
            }
}

void Kernel::convolve_into(const Field& phi, Field& out, ConvMode mode, ConvPath path) const {
    if (!(phi.domain == dom_))
        throw ValidationError("convolve: field domain differs from the kernel's build domain");
    if (&out == &phi) throw ValidationError("convolve: output must not alias the input");
    if (!(out.domain == dom_) || out.v.size() != phi.v.size()) out = Field(dom_);
    if (path == ConvPath::direct) {
        direct_convolve(j_, phi, out, mode);
        return;
    }
    std::lock_guard<std::mutex> lk(cache_->mu);
    auto& slot = cache_->modes[size_t(mode)];
    ensure_mode(dom_, j_, half_, slot, mode);
    fft_apply(*slot, slot->kspec, phi, out);
}

Field Kernel::convolve(const Field& phi, ConvMode mode, ConvPath path) const {
    Field out(dom_);
    convolve_into(phi, out, mode, path);
    return out;
}

std::vector<Field> Kernel::grad_convolve(const Field& phi, ConvMode mode, ConvPath path) const {
    if (!(phi.domain == dom_))
        throw ValidationError("convolve: field domain differs from the kernel's build domain");
    std::vector<Field> out;
    out.reserve(size_t(dom_.dim));
    for (int a = 0; a < dom_.dim; ++a) out.emplace_back(dom_);
    if (path == ConvPath::direct) {
        for (int a = 0; a < dom_.dim; ++a)
            direct_convolve(grad_[size_t(a)], phi, out[size_t(a)], mode);
        return out;
    }
    std::lock_guard<std::mutex> lk(cache_->mu);
    auto& slot = cache_->modes[size_t(mode)];
    ensure_mode(dom_, j_, half_, slot, mode);
    if (!slot->grad_ready) {
        for (int a = 0; a < dom_.dim; ++a)
            spectrum_of(*slot, grad_[size_t(a)], half_, slot->gspec[size_t(a)]);
        slot->grad_ready = true;
    }
    for (int a = 0; a < dom_.dim; ++a) fft_apply(*slot, slot->gspec[size_t(a)], phi, out[size_t(a)]);
    return out;
}

const Field& Kernel::self_interaction() const {
    std::lock_guard<std::mutex> lk(cache_->mu);
    if (!cache_->a) {
        Field ones(dom_, 1.0);
        auto a = std::make_unique<Field>(dom_);
        auto& slot = cache_->modes[size_t(ConvMode::truncated)];
        ensure_mode(dom_, j_, half_, slot, ConvMode::truncated);
        fft_apply(*slot, slot->kspec, ones, *a);
        cache_->a = std::move(a);
    }
    return *cache_->a;
}

namespace {

struct AnalyticKernel {
    int dim;
    double cut2;                                    // squared support radius
    double (*value)(const double*, double, double, int);
    std::array<double, 3> (*grad)(const double*, double, double, int);
    double p1, p2;                                  // shape parameters
};

double gaussian_value(const double* z, double sigma, double amplitude, int dim) {
    const double r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
    const double norm = amplitude * std::pow(2.0 * std::numbers::pi * sigma * sigma, -0.5 * dim);
    return norm * std::exp(-r2 / (2.0 * sigma * sigma));
}

std::array<double, 3> gaussian_grad(const double* z, double sigma, double amplitude, int dim) {
    const double v = gaussian_value(z, sigma, amplitude, dim);
    return {v * -z[0] / (sigma * sigma), v * -z[1] / (sigma * sigma), v * -z[2] / (sigma * sigma)};
}

double bump_value(const double* z, double r0, double amplitude, int) {
    const double u2 = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) / (r0 * r0);
    const double w = 1.0 - u2;
    return amplitude * w * w;
}

std::array<double, 3> bump_grad(const double* z, double r0, double amplitude, int) {
    const double u2 = (z[0] * z[0] + z[1] * z[1] + z[2] * z[2]) / (r0 * r0);
    const double c = -4.0 * amplitude * (1.0 - u2) / (r0 * r0);
    return {c * z[0], c * z[1], c * z[2]};
}

struct TableData {
    std::array<long, 3> half{0, 0, 0};
    std::vector<double> values;
};

TableData load_table(const std::string& path, const Domain& dom) {
    static_assert(std::endian::native == std::endian::little,
                  "raw float64 kernel tables assume a little-endian host");
    std::FILE* sf = std::fopen((path + ".json").c_str(), "rb");
    if (!sf) throw ValidationError("kernel: cannot open sidecar " + path + ".json");
    std::string text;
    char buf[4096];
    size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, sf)) > 0) text.append(buf, got);
    std::fclose(sf);

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("kernel: bad sidecar JSON: ") + e.what());
    }
    if (!meta.contains("shape") || !meta.contains("spacing"))
        throw ValidationError("kernel: sidecar must provide shape and spacing");
    const auto shape = meta["shape"].get<std::vector<long>>();
    const auto spacing = meta["spacing"].get<std::vector<double>>();
    if (int(shape.size()) != dom.dim || int(spacing.size()) != dom.dim)
        throw ValidationError("kernel: sidecar rank differs from the domain dimension");

    TableData t;
    long count = 1;
    for (int a = 0; a < dom.dim; ++a) {
        if (shape[size_t(a)] < 1 || shape[size_t(a)] % 2 == 0)
            throw ValidationError("kernel: table shape must be odd per axis (centered lattice)");
        const double h = dom.spacing(a);
        if (std::fabs(spacing[size_t(a)] - h) > 1e-12 * h)
            throw ValidationError("kernel: table spacing disagrees with the domain lattice");
        t.half[size_t(a)] = (shape[size_t(a)] - 1) / 2;
        count *= shape[size_t(a)];
    }

    std::FILE* df = std::fopen(path.c_str(), "rb");
    if (!df) throw ValidationError("kernel: cannot open table " + path);
    t.values.resize(size_t(count));
    const size_t read = std::fread(t.values.data(), sizeof(double), size_t(count), df);
    std::fclose(df);
    if (read != size_t(count))
        throw ValidationError("kernel: table holds " + std::to_string(read) +
                              " samples, sidecar promises " + std::to_string(count));
    return t;
}

} // namespace

Kernel build_kernel(const KernelSpec& spec, const Domain& domain) {
    Kernel ker;
    ker.dom_ = domain;
    for (int a = 0; a < domain.dim; ++a) ker.half_[size_t(a)] = domain.cells[size_t(a)] - 1;
    const long s0 = 2 * ker.half_[0] + 1, s1 = 2 * ker.half_[1] + 1, s2 = 2 * ker.half_[2] + 1;
    const long total = s0 * s1 * s2;
    ker.j_.assign(size_t(total), 0.0);
    for (int a = 0; a < domain.dim; ++a) ker.grad_[size_t(a)].assign(size_t(total), 0.0);

    // ball radius: smallest lattice-aligned radius (multiples of the finest
    // spacing) that covers every difference of two points of the box
    double diam = domain.diameter();
    double hmin = domain.spacing(0);
    for (int a = 1; a < domain.dim; ++a) hmin = std::min(hmin, domain.spacing(a));
    ker.m1_ = std::ceil(diam / hmin - 1e-9) * hmin;

    const bool analytic = !std::holds_alternative<TabulatedKernelSpec>(spec);
    AnalyticKernel ak{};
    if (const auto* g = std::get_if<GaussianSpec>(&spec)) {
        if (!(g->sigma > 0.0) || !(g->amplitude > 0.0))
            throw ValidationError("kernel: gaussian needs sigma > 0 and amplitude > 0");
        ak = {domain.dim, 100.0 * g->sigma * g->sigma, gaussian_value, gaussian_grad, g->sigma,
              g->amplitude};
    } else if (const auto* b = std::get_if<CompactBumpSpec>(&spec)) {
        if (!(b->r0 > 0.0) || !(b->amplitude > 0.0))
            throw ValidationError("kernel: compact_bump needs r0 > 0 and amplitude > 0");
        ak = {domain.dim, b->r0 * b->r0, bump_value, bump_grad, b->r0, b->amplitude};
    }

    if (analytic) {
        for (long k0 = -ker.half_[0]; k0 <= ker.half_[0]; ++k0)
            for (long k1 = -ker.half_[1]; k1 <= ker.half_[1]; ++k1)
                for (long k2 = -ker.half_[2]; k2 <= ker.half_[2]; ++k2) {
                    const double z[3] = {k0 * domain.spacing(0), k1 * domain.spacing(1),
                                         k2 * domain.spacing(2)};
                    const long di = ker.diff_index({k0, k1, k2});
                    if (z[0] * z[0] + z[1] * z[1] + z[2] * z[2] > ak.cut2) continue;
                    ker.j_[size_t(di)] = ak.value(z, ak.p1, ak.p2, ak.dim);
                    const auto g = ak.grad(z, ak.p1, ak.p2, ak.dim);
                    for (int a = 0; a < domain.dim; ++a)
                        ker.grad_[size_t(a)][size_t(di)] = g[size_t(a)];
                }
    } else {
        const auto& tspec = std::get<TabulatedKernelSpec>(spec);
        TableData t = load_table(tspec.path, domain);
        double peak = 0.0;
        for (double v : t.values) {
            if (!std::isfinite(v))
                throw ValidationError("kernel: non-integrable samples (NaN/Inf) in table");
            peak = std::max(peak, std::fabs(v));
        }
        const long ts1 = 2 * t.half[1] + 1, ts2 = 2 * t.half[2] + 1;
        auto tidx = [&](long k0, long k1, long k2) {
            return ((k0 + t.half[0]) * ts1 + (k1 + t.half[1])) * ts2 + (k2 + t.half[2]);
        };
        for (long k0 = -t.half[0]; k0 <= t.half[0]; ++k0)
            for (long k1 = -t.half[1]; k1 <= t.half[1]; ++k1)
                for (long k2 = -t.half[2]; k2 <= t.half[2]; ++k2)
                    if (std::fabs(t.values[size_t(tidx(k0, k1, k2))] -
                                  t.values[size_t(tidx(-k0, -k1, -k2))]) > 1e-12 * peak)
                        throw ValidationError(
                            "kernel: tabulated samples break J(z) = J(-z) at a lattice point");
        // crop (or zero-extend) the table onto the difference lattice,
        // averaging mirror samples so the symmetry holds bit-exactly
        for (long k0 = -ker.half_[0]; k0 <= ker.half_[0]; ++k0)
            for (long k1 = -ker.half_[1]; k1 <= ker.half_[1]; ++k1)
                for (long k2 = -ker.half_[2]; k2 <= ker.half_[2]; ++k2) {
                    if (std::labs(k0) > t.half[0] || std::labs(k1) > t.half[1] ||
                        std::labs(k2) > t.half[2])
                        continue;
                    const double v = 0.5 * (t.values[size_t(tidx(k0, k1, k2))] +
                                            t.values[size_t(tidx(-k0, -k1, -k2))]);
                    ker.j_[size_t(ker.diff_index({k0, k1, k2}))] = v;
                }
        // tables carry no analytic gradient; differentiate the lattice
        // function itself (central differences, one-sided at the rim)
        for (int a = 0; a < domain.dim; ++a) {
            std::array<long, 3> e{0, 0, 0};
            e[size_t(a)] = 1;
            const double h = domain.spacing(a);
            for (long k0 = -ker.half_[0]; k0 <= ker.half_[0]; ++k0)
                for (long k1 = -ker.half_[1]; k1 <= ker.half_[1]; ++k1)
                    for (long k2 = -ker.half_[2]; k2 <= ker.half_[2]; ++k2) {
                        const std::array<long, 3> k{k0, k1, k2};
                        const long ka = k[size_t(a)];
                        double d;
                        if (ka == -ker.half_[size_t(a)]) {
                            d = (ker.j_[size_t(ker.diff_index({k0 + e[0], k1 + e[1], k2 + e[2]}))] -
                                 ker.j_[size_t(ker.diff_index(k))]) / h;
                        } else if (ka == ker.half_[size_t(a)]) {
                            d = (ker.j_[size_t(ker.diff_index(k))] -
                                 ker.j_[size_t(ker.diff_index({k0 - e[0], k1 - e[1], k2 - e[2]}))]) / h;
                        } else {
                            d = (ker.j_[size_t(ker.diff_index({k0 + e[0], k1 + e[1], k2 + e[2]}))] -
                                 ker.j_[size_t(ker.diff_index({k0 - e[0], k1 - e[1], k2 - e[2]}))]) /
                                (2.0 * h);
                        }
                        ker.grad_[size_t(a)][size_t(ker.diff_index(k))] = d;
                    }
        }
    }

    // enforce the symmetry exactly: J even, each grad component odd
    for (long k0 = -ker.half_[0]; k0 <= ker.half_[0]; ++k0)
        for (long k1 = -ker.half_[1]; k1 <= ker.half_[1]; ++k1)
            for (long k2 = -ker.half_[2]; k2 <= ker.half_[2]; ++k2) {
                const long i = ker.diff_index({k0, k1, k2});
                const long im = ker.diff_index({-k0, -k1, -k2});
                if (i > im) continue;
                const double avg = 0.5 * (ker.j_[size_t(i)] + ker.j_[size_t(im)]);
                ker.j_[size_t(i)] = avg;
                ker.j_[size_t(im)] = avg;
                for (int a = 0; a < domain.dim; ++a) {
                    auto& g = ker.grad_[size_t(a)];
                    const double odd = 0.5 * (g[size_t(i)] - g[size_t(im)]);
                    g[size_t(i)] = odd;
                    g[size_t(im)] = -odd;
                }
            }

    for (double v : ker.j_)
        if (!std::isfinite(v)) throw ValidationError("kernel: non-integrable samples (NaN/Inf)");

    // ball norms by midpoint quadrature. Analytic kernels are integrated on a
    // lattice wide enough to cover the whole ball; tables only over the part
    // of the ball their samples reach.
    const double w = domain.cell_volume();
    const double m1sq = ker.m1_ * ker.m1_ * (1.0 + 1e-14);
    double l1 = 0.0, l1g = 0.0;
    if (analytic) {
        std::array<long, 3> R{0, 0, 0};
        for (int a = 0; a < domain.dim; ++a)
            R[size_t(a)] = long(std::ceil(ker.m1_ / domain.spacing(a) - 1e-9));
        for (long k0 = -R[0]; k0 <= R[0]; ++k0)
            for (long k1 = -R[1]; k1 <= R[1]; ++k1)
                for (long k2 = -R[2]; k2 <= R[2]; ++k2) {
                    const double z[3] = {k0 * domain.spacing(0), k1 * domain.spacing(1),
                                         k2 * domain.spacing(2)};
                    const double r2 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2];
                    if (r2 > m1sq || r2 > ak.cut2) continue;
                    l1 += std::fabs(ak.value(z, ak.p1, ak.p2, ak.dim));
                    const auto g = ak.grad(z, ak.p1, ak.p2, ak.dim);
                    double gg = 0.0;
                    for (int a = 0; a < domain.dim; ++a) gg += g[size_t(a)] * g[size_t(a)];
                    l1g += std::sqrt(gg);
                }
    } else {
        for (long k0 = -ker.half_[0]; k0 <= ker.half_[0]; ++k0)
            for (long k1 = -ker.half_[1]; k1 <= ker.half_[1]; ++k1)
                for (long k2 = -ker.half_[2]; k2 <= ker.half_[2]; ++k2) {
                    const double z[3] = {k0 * domain.spacing(0), k1 * domain.spacing(1),
                                         k2 * domain.spacing(2)};
                    if (z[0] * z[0] + z[1] * z[1] + z[2] * z[2] > m1sq) continue;
                    const long di = ker.diff_index({k0, k1, k2});
                    l1 += std::fabs(ker.j_[size_t(di)]);
                    double gg = 0.0;
                    for (int a = 0; a < domain.dim; ++a) {
                        const double gv = ker.grad_[size_t(a)][size_t(di)];
                        gg += gv * gv;
                    }
                    l1g += std::sqrt(gg);
                }
    }
    ker.l1_j_ = l1 * w;
    ker.l1_grad_j_ = l1g * w;
    if (!std::isfinite(ker.l1_j_) || !std::isfinite(ker.l1_grad_j_))
        throw ValidationError("kernel: ball norms are not finite");
    return ker;
}

} // namespace nlch
