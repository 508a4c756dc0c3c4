// Command-line front end: every acceptance scenario is reproducible from one
// command here. Exit contract: 0 pass, 1 assertion failure, 2 validation
// error, 3 numeric (solver) failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "nlch/diagnostics.hpp"
#include "nlch/dynamics.hpp"
#include "nlch/errors.hpp"
#include "nlch/io.hpp"
#include "nlch/kernel.hpp"
#include "nlch/log.hpp"
#include "nlch/potential.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nlch;

namespace {

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void write_json_report(const std::string& dir, const std::string& name, const json& j) {
    fs::create_directories(dir);
    write_text_file(dir + "/" + name, j.dump(2) + "\n");
}

std::string snapshot_file_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "phi_%06zu.f64", i);
    return buf;
}

// kernel and potential for a saved trajectory come from its manifest echo
RunConfig config_for_trajectory(const std::string& traj_dir, const std::string& config_flag) {
    if (!config_flag.empty()) return load_run_config(config_flag);
    const std::string mpath = traj_dir + "/manifest.json";
    if (!fs::exists(mpath))
        throw ValidationError("no --config given and " + mpath +
                              " does not exist; cannot recover kernel and potential");
    json m;
    try {
        m = json::parse(read_text_file(mpath));
    } catch (const json::exception& e) {
        throw ValidationError("manifest " + mpath + ": " + e.what());
    }
    if (!m.contains("config"))
        throw ValidationError("manifest " + mpath + " has no config echo");
    return parse_run_config(m["config"].dump());
}

struct GlobalArgs {
    std::string config;
    std::string out;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 1;
};

int cmd_simulate(const GlobalArgs& g) {
    if (g.config.empty()) throw ValidationError("simulate: --config is required");
    RunConfig c = load_run_config(g.config);
    if (g.seed_set) {
        if (c.phi0.seed == c.seed) c.phi0.seed = g.seed;
        c.seed = g.seed;
    }
    const std::string dir = g.out.empty() ? c.output_dir : g.out;

    Kernel ker = build_kernel(c.kernel, c.domain);
    const Field phi0 = make_phi0(c.phi0, c.domain);
    logf(LogLevel::info, "simulate: %d-D, %ld cells, dt=%g, t_end=%g", c.domain.dim,
         c.domain.cell_count(), c.dt, c.t_end);
    const Trajectory traj = simulate(phi0, c.potential, ker, c.dt, c.t_end, c.snapshot_every,
                                     c.solver);
    save_trajectory(dir, traj);

    std::vector<std::string> files{"meta.json", "series.csv"};
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i)
        files.push_back(snapshot_file_name(i));
    write_manifest(dir, c, files);

    const SeriesRow& last = traj.series.back();
    std::printf("wrote %zu snapshots and %zu series rows to %s\n", traj.snapshots.size(),
                traj.series.size(), dir.c_str());
    std::printf("final: t=%s energy=%s sup|phi|=%s min_gap=%s mass=%s\n", g17(last.time).c_str(),
                g17(last.energy_form1).c_str(), g17(last.sup_abs_phi).c_str(),
                g17(last.min_gap).c_str(), g17(last.mass).c_str());
    return 0;
}

int cmd_check_potential(const GlobalArgs& g, double theta, double eps0, double eps1,
                        int samples) {
    PotentialParams p;
    p.theta = theta;
    p.eps0 = eps0;
    p.eps1 = eps1;
    const AssumptionReport rep = check_assumptions(p, samples);
    json j{{"theta", theta},
           {"eps0", eps0},
           {"eps1", eps1},
           {"samples", samples},
           {"a1_ok", rep.a1_ok},
           {"a2_ok", rep.a2_ok},
           {"a3_ok", rep.a3_ok},
           {"c_f_estimate", rep.c_f_estimate},
           {"worst_delta", rep.worst_delta},
           {"min_ddf", rep.min_ddf},
           {"all_ok", rep.all_ok()}};
    write_json_report(g.out.empty() ? "." : g.out, "check_potential.json", j);
    std::printf("a1_ok=%s a2_ok=%s a3_ok=%s c_f_estimate=%s\n", rep.a1_ok ? "true" : "false",
                rep.a2_ok ? "true" : "false", rep.a3_ok ? "true" : "false",
                g17(rep.c_f_estimate).c_str());
    if (!rep.all_ok()) throw CheckFailure("potential assumptions violated");
    return 0;
}

int cmd_check_kernel(const GlobalArgs& g, int trials) {
    if (g.config.empty()) throw ValidationError("check-kernel: --config is required");
    const RunConfig c = load_run_config(g.config);
    Kernel ker = build_kernel(c.kernel, c.domain);
    const Domain& d = c.domain;

    bool norms_ok = std::isfinite(ker.l1_j()) && ker.l1_j() > 0.0 &&
                    std::isfinite(ker.l1_grad_j()) && ker.l1_grad_j() >= 0.0 &&
                    std::isfinite(ker.m1()) && ker.m1() > 0.0;

    // random bounded fields must respect the ball-norm dominations
    std::mt19937_64 rng(g.seed_set ? g.seed : c.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double worst_conv = 0.0, worst_grad = 0.0, worst_fft = 0.0;
    bool fft_checked = false;
    const double slack = 1.0 + 1e-12;
    for (int t = 0; t < trials; ++t) {
        Field f(d);
        for (double& x : f.v) x = uni(rng);
        const Field jf = ker.convolve(f);
        worst_conv = std::max(worst_conv, norm_linf(jf) / ker.l1_j());
        const std::vector<Field> gj = ker.grad_convolve(f);
        for (const Field& comp : gj)
            if (ker.l1_grad_j() > 0.0)
                worst_grad = std::max(worst_grad, norm_linf(comp) / ker.l1_grad_j());
        if (*std::max_element(d.cells.begin(), d.cells.end()) <= 64) {
            const Field direct = ker.convolve(f, ConvMode::truncated, ConvPath::direct);
            double num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < jf.v.size(); ++i) {
                num = std::max(num, std::abs(jf.v[i] - direct.v[i]));
                den = std::max(den, std::abs(direct.v[i]));
            }
            worst_fft = std::max(worst_fft, num / std::max(den, 1e-300));
            fft_checked = true;
        }
    }
    const bool conv_ok = worst_conv <= slack;
    const bool grad_ok = worst_grad <= slack;
    const bool fft_ok = !fft_checked || worst_fft <= 1e-12;

    json j{{"l1_j", ker.l1_j()},
           {"l1_grad_j", ker.l1_grad_j()},
           {"m1", ker.m1()},
           {"trials", trials},
           {"norms_ok", norms_ok},
           {"convolve_bound_ok", conv_ok},
           {"grad_bound_ok", grad_ok},
           {"worst_convolve_ratio", worst_conv},
           {"worst_grad_ratio", worst_grad},
           {"fft_vs_direct_checked", fft_checked},
           {"fft_vs_direct_rel_err", fft_checked ? worst_fft : 0.0},
           {"fft_vs_direct_ok", fft_ok}};
    write_json_report(g.out.empty() ? "." : g.out, "check_kernel.json", j);
    std::printf("l1_j=%s l1_grad_j=%s m1=%s conv_ok=%s grad_ok=%s fft_ok=%s\n",
                g17(ker.l1_j()).c_str(), g17(ker.l1_grad_j()).c_str(), g17(ker.m1()).c_str(),
                conv_ok ? "true" : "false", grad_ok ? "true" : "false",
                fft_ok ? "true" : "false");
    if (!(norms_ok && conv_ok && grad_ok && fft_ok))
        throw CheckFailure("kernel bound checks failed");
    return 0;
}

int cmd_iter_lemma(const GlobalArgs& g, double C, double b, double eps, double y0, long n) {
    const IterLemmaReport rep = iter_lemma_check(C, b, eps, y0, n);
    const std::string dir = g.out.empty() ? "." : g.out;
    json j{{"C", C},
           {"b", b},
           {"eps", eps},
           {"y0", y0},
           {"n_max", n},
           {"ln_threshold", rep.ln_threshold},
           {"threshold", std::exp(rep.ln_threshold)},
           {"precondition_ok", rep.precondition_ok},
           {"conclusion_ok", rep.conclusion_ok},
           {"first_violation", rep.first_violation}};
    write_json_report(dir, "iter_lemma.json", j);
    std::string csv = "n,ln_y,ln_bound\n";
    for (std::size_t i = 0; i < rep.ln_y.size(); ++i)
        csv += std::to_string(i) + "," + g17(rep.ln_y[i]) + "," + g17(rep.ln_bound[i]) + "\n";
    write_text_file(dir + "/iter_lemma.csv", csv);
    std::printf("threshold=%s precondition_ok=%s conclusion_ok=%s\n",
                g17(std::exp(rep.ln_threshold)).c_str(), rep.precondition_ok ? "true" : "false",
                rep.conclusion_ok ? "true" : "false");
    if (rep.precondition_ok && !rep.conclusion_ok)
        throw CheckFailure("decay bound violated at n = " + std::to_string(rep.first_violation));
    return 0;
}

int cmd_certify(const GlobalArgs& g, CertificateConstants c, bool c_j_given, double tau) {
    if (!c_j_given) c.c_j = c_j_from_l1_grad(c.l1_gradJ);
    const SeparationCertificate cert = delta_certificate(c, tau);
    const bool sound = certificate_sound(cert);
    json j{{"constants",
            {{"c_f", c.c_f},
             {"c_omega", c.c_omega},
             {"c_j", c.c_j},
             {"l1_gradJ", c.l1_gradJ},
             {"energy_constant", c.energy_constant},
             {"eps0", c.eps0},
             {"eps1", c.eps1}}},
           {"tau", tau},
           {"ln_K", cert.ln_K},
           {"ln_delta", cert.ln_delta},
           {"ln_tau_tilde", cert.ln_tau_tilde},
           {"tau_tilde", cert.tau_tilde},
           {"feasible", cert.feasible},
           {"sound", sound}};
    write_json_report(g.out.empty() ? "." : g.out, "certify.json", j);
    std::printf("ln_delta=%s ln_tau_tilde=%s tau_tilde=%s sound=%s\n", g17(cert.ln_delta).c_str(),
                g17(cert.ln_tau_tilde).c_str(), g17(cert.tau_tilde).c_str(),
                sound ? "true" : "false");
    if (!(cert.feasible && sound)) throw CheckFailure("certificate failed its re-evaluation");
    return 0;
}

int cmd_degiorgi(const GlobalArgs& g, const std::string& traj_dir, double T, double tau_tilde,
                 double delta, int levels, const std::string& sign, bool require_decay) {
    if (traj_dir.empty()) throw ValidationError("degiorgi: --traj is required");
    const Trajectory traj = load_trajectory(traj_dir);
    const RunConfig c = config_for_trajectory(traj_dir, g.config);
    Kernel ker = build_kernel(c.kernel, traj.domain);

    DeGiorgiParams dp;
    dp.T = T > 0.0 ? T : traj.snapshot_times.back();
    dp.tau_tilde = tau_tilde > 0.0 ? tau_tilde : dp.T / 5.0;
    dp.n_levels = levels;
    if (sign == "plus")
        dp.sign = LevelSign::plus;
    else if (sign == "minus")
        dp.sign = LevelSign::minus;
    else
        throw ValidationError("degiorgi: --sign must be plus or minus");
    if (delta > 0.0) {
        dp.delta = delta;
    } else {
        const double t_start = dp.T - 3.0 * dp.tau_tilde;
        const double demp = separation_profile(traj, std::max(0.0, t_start)).delta_emp;
        const double cap = std::min(c.potential.eps0 / 2.0, c.potential.eps1);
        dp.delta = std::min(demp / 2.0, 0.99 * cap);
        logf(LogLevel::info, "degiorgi: defaulted delta to %g (delta_emp = %g)", dp.delta, demp);
    }

    const DeGiorgiReport rep = degiorgi_sequences(traj, dp, ker, c.potential);

    const std::string dir = g.out.empty() ? traj_dir : g.out;
    fs::create_directories(dir);
    std::string csv = "n,t_n,k_n,y_n,x_n\n";
    json jl = json::array();
    for (std::size_t i = 0; i < rep.levels.size(); ++i) {
        const DeGiorgiLevel& lv = rep.levels[i];
        csv += std::to_string(i) + "," + g17(lv.t_start) + "," + g17(lv.k) + "," + g17(lv.y) +
               "," + g17(lv.x) + "\n";
        jl.push_back({{"n", i},
                      {"t_n", lv.t_start},
                      {"k_n", lv.k},
                      {"y_n", lv.y},
                      {"x_n", lv.x}});
    }
    write_text_file(dir + "/degiorgi.csv", csv);
    json j{{"T", dp.T},
           {"tau_tilde", dp.tau_tilde},
           {"delta", dp.delta},
           {"sign", sign},
           {"levels", jl},
           {"sup_phi_window", rep.sup_phi_window},
           {"po_ok", rep.po_ok},
           {"nesting_ok", rep.nesting_ok},
           {"decayed", rep.decayed}};
    write_json_report(dir, "degiorgi.json", j);
    std::printf("sup_phi_window=%s po_ok=%s nesting_ok=%s decayed=%s y0=%s y_last=%s\n",
                g17(rep.sup_phi_window).c_str(), rep.po_ok ? "true" : "false",
                rep.nesting_ok ? "true" : "false", rep.decayed ? "true" : "false",
                g17(rep.levels.front().y).c_str(), g17(rep.levels.back().y).c_str());
    if (!rep.po_ok) throw CheckFailure("sup over the window exceeds 1");
    if (!rep.nesting_ok) throw CheckFailure("level masses y_n are not nested");
    if (require_decay && !rep.decayed) throw CheckFailure("y_n did not decay");
    return 0;
}

int cmd_probe_attractor(const GlobalArgs& g, int count, double m, double t_long,
                        const std::vector<double>& constants) {
    if (g.config.empty()) throw ValidationError("probe-attractor: --config is required");
    const RunConfig c = load_run_config(g.config);
    std::vector<Field> data;
    if (!constants.empty()) {
        for (double v : constants) data.push_back(Field(c.domain, v));
    } else {
        data = attractor_ensemble(c.domain, count, m, g.seed_set ? g.seed : c.seed);
    }
    const AttractorReport rep = attractor_probe(c.domain, c.kernel, c.potential, c.solver, data,
                                                m, t_long, c.dt, g.threads);

    const std::string dir = g.out.empty() ? "." : g.out;
    fs::create_directories(dir);
    std::string csv = "index,mean0,final_min_gap,alpha,c3,ok\n";
    json jm = json::array();
    for (const AttractorMember& mem : rep.members) {
        csv += std::to_string(mem.index) + "," + g17(mem.mean0) + "," +
               g17(mem.final_min_gap) + "," + g17(mem.alpha) + "," + g17(mem.c3) + "," +
               (mem.ok ? "true" : "false") + "\n";
        jm.push_back({{"index", mem.index},
                      {"mean0", mem.mean0},
                      {"final_min_gap", mem.final_min_gap},
                      {"alpha", mem.alpha},
                      {"c3", mem.c3},
                      {"ok", mem.ok},
                      {"error", mem.error}});
    }
    write_text_file(dir + "/probe_attractor.csv", csv);
    json j{{"m", m},
           {"t_long", t_long},
           {"members", jm},
           {"delta_ens", rep.delta_ens},
           {"alpha_ens", rep.alpha_ens},
           {"c_ens", rep.c_ens},
           {"common_bound_ok", rep.common_bound_ok}};
    write_json_report(dir, "probe_attractor.json", j);
    std::printf("delta_ens=%s alpha_ens=%s c_ens=%s common_bound_ok=%s\n",
                g17(rep.delta_ens).c_str(), g17(rep.alpha_ens).c_str(), g17(rep.c_ens).c_str(),
                rep.common_bound_ok ? "true" : "false");
    if (!rep.common_bound_ok)
        throw CheckFailure("no common separation and Hölder bound covers the ensemble");
    return 0;
}

int cmd_regularity(const GlobalArgs& g, const std::vector<std::string>& traj_dirs,
                   std::vector<double> taus, double max_beta) {
    std::sort(taus.begin(), taus.end());
    std::vector<Trajectory> runs;
    RunConfig c;
    if (!traj_dirs.empty()) {
        for (const std::string& dir : traj_dirs) runs.push_back(load_trajectory(dir));
        c = config_for_trajectory(traj_dirs.front(), g.config);
    } else {
        if (g.config.empty())
            throw ValidationError("regularity: need --config or at least one --traj");
        c = load_run_config(g.config);
        Kernel ker = build_kernel(c.kernel, c.domain);
        const Field phi0 = make_phi0(c.phi0, c.domain);
        runs.push_back(simulate(phi0, c.potential, ker, c.dt, c.t_end, c.snapshot_every,
                                c.solver));
    }
    Kernel ker = build_kernel(c.kernel, runs.front().domain);
    const RegularityReport rep = regularity_scaling(runs, taus, ker, c.potential);

    const std::string dir = g.out.empty() ? "." : g.out;
    fs::create_directories(dir);
    std::string csv = "name,c0,beta\n";
    json jf = json::array();
    for (const DecayFit& f : rep.fits) {
        csv += f.name + "," + g17(f.c0) + "," + g17(f.beta) + "\n";
        jf.push_back({{"name", f.name}, {"c0", f.c0}, {"beta", f.beta}});
    }
    write_text_file(dir + "/regularity_fits.csv", csv);
    std::string lcsv = "p,q,grad_mu,grad_phi\n";
    json jn = json::array();
    for (const LqLpNorm& n : rep.lqlp_norms) {
        lcsv += g17(n.p) + "," + (n.q == 0.0 ? std::string("inf") : g17(n.q)) + "," +
                g17(n.grad_mu) + "," + g17(n.grad_phi) + "\n";
        jn.push_back({{"p", n.p},
                      {"q", n.q == 0.0 ? json("inf") : json(n.q)},
                      {"grad_mu", n.grad_mu},
                      {"grad_phi", n.grad_phi}});
    }
    write_text_file(dir + "/regularity_lqlp.csv", lcsv);
    json j{{"taus", taus},
           {"fits", jf},
           {"c0_fit", rep.c0_fit},
           {"beta_fit", rep.beta_fit},
           {"c1_mu_inf", rep.c1_mu_inf},
           {"c2_dtmu", rep.c2_dtmu},
           {"alpha_holder", rep.alpha_holder},
           {"c3_holder", rep.c3_holder},
           {"lqlp_norms", jn}};
    write_json_report(dir, "regularity.json", j);
    std::printf("beta(dtphi)=%s beta(mu_h1)=%s c1=%s c2=%s alpha=%s\n",
                g17(rep.fits[0].beta).c_str(), g17(rep.fits[1].beta).c_str(),
                g17(rep.c1_mu_inf).c_str(), g17(rep.c2_dtmu).c_str(),
                g17(rep.alpha_holder).c_str());
    if (max_beta > 0.0 && (rep.fits[0].beta > max_beta || rep.fits[1].beta > max_beta))
        throw CheckFailure("fitted decay exponent exceeds --max-beta = " + g17(max_beta));
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    log_init_from_env();
    CLI::App app{"nonlocal Cahn-Hilliard simulator and verification toolkit"};
    app.require_subcommand(1);

    GlobalArgs g;
    app.add_option("--config", g.config, "JSON run configuration");
    app.add_option("--out", g.out, "output directory");
    auto* seed_opt = app.add_option("--seed", g.seed, "override the config seed");
    app.add_option("--threads", g.threads, "worker threads for ensemble commands");

    auto* sim = app.add_subcommand("simulate", "run the scheme and save the trajectory");
    sim->fallthrough();

    double theta = 1.0, ck_eps0 = 0.5, ck_eps1 = 0.25;
    int samples = 2000;
    auto* chk_pot = app.add_subcommand("check-potential", "verify the potential assumptions");
    chk_pot->fallthrough();
    chk_pot->add_option("--theta", theta, "temperature parameter");
    chk_pot->add_option("--eps0", ck_eps0, "inner assumption radius");
    chk_pot->add_option("--eps1", ck_eps1, "outer assumption radius");
    chk_pot->add_option("--samples", samples, "delta sample count");

    int trials = 20;
    auto* chk_ker = app.add_subcommand("check-kernel", "verify kernel ball norms and bounds");
    chk_ker->fallthrough();
    chk_ker->add_option("--trials", trials, "random field trials");

    double il_c = 1.0, il_b = 2.0, il_eps = 1.0, il_y0 = 0.5;
    long il_n = 50;
    auto* il = app.add_subcommand("iter-lemma", "check the geometric decay recursion");
    il->fallthrough();
    il->add_option("--C", il_c, "recursion constant");
    il->add_option("--b", il_b, "recursion base");
    il->add_option("--eps", il_eps, "recursion exponent offset");
    il->add_option("--y0", il_y0, "initial value");
    il->add_option("--n", il_n, "iterations");

    CertificateConstants cc;
    cc.c_f = 1.0;
    cc.c_omega = 1.0;
    cc.c_j = 1.0;
    cc.l1_gradJ = 1.0;
    cc.energy_constant = 1.0;
    cc.eps0 = 0.5;
    cc.eps1 = 0.25;
    double cert_tau = 1.0;
    auto* cert = app.add_subcommand("certify", "compute the separation certificate");
    cert->fallthrough();
    cert->add_option("--c-f", cc.c_f, "potential constant");
    cert->add_option("--c-omega", cc.c_omega, "interpolation constant");
    auto* cj_opt = cert->add_option("--c-j", cc.c_j, "kernel constant (default: from --l1-grad)");
    cert->add_option("--l1-grad", cc.l1_gradJ, "kernel gradient ball norm");
    cert->add_option("--energy-constant", cc.energy_constant, "a-priori estimate constant");
    cert->add_option("--eps0", cc.eps0, "inner assumption radius");
    cert->add_option("--eps1", cc.eps1, "outer assumption radius");
    cert->add_option("--tau", cert_tau, "separation onset time");

    std::string traj_dir, sign = "plus";
    double dg_T = 0.0, dg_tt = 0.0, dg_delta = 0.0;
    int dg_levels = 8;
    bool require_decay = false;
    auto* dg = app.add_subcommand("degiorgi", "level-set mass sequences on a trajectory");
    dg->fallthrough();
    dg->add_option("--traj", traj_dir, "trajectory directory");
    dg->add_option("--T", dg_T, "window end (default: last snapshot)");
    dg->add_option("--tau-tilde", dg_tt, "window scale (default: T/5)");
    dg->add_option("--delta", dg_delta, "level offset (default: delta_emp/2)");
    dg->add_option("--levels", dg_levels, "number of refinement levels");
    dg->add_option("--sign", sign, "plus or minus level sets");
    dg->add_flag("--require-decay", require_decay, "fail unless y_n decays");

    int pa_count = 8;
    double pa_m = 0.5, pa_tlong = 20.0;
    std::vector<double> pa_constants;
    auto* pa = app.add_subcommand("probe-attractor", "long runs over a seeded ensemble");
    pa->fallthrough();
    pa->add_option("--count", pa_count, "ensemble size");
    pa->add_option("--m", pa_m, "mean confinement margin");
    pa->add_option("--t-long", pa_tlong, "integration horizon");
    pa->add_option("--constant", pa_constants, "use constant initial data (repeatable)");

    std::vector<std::string> reg_trajs;
    std::vector<double> reg_taus{0.01, 0.1, 1.0};
    double max_beta = 0.0;
    auto* reg = app.add_subcommand("regularity", "smoothing-rate fits over a transient");
    reg->fallthrough();
    reg->add_option("--traj", reg_trajs, "existing trajectory directories (repeatable)");
    reg->add_option("--taus", reg_taus, "tau sample points")->delimiter(',');
    reg->add_option("--max-beta", max_beta, "fail when the fitted exponent exceeds this");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }
    g.seed_set = seed_opt->count() > 0;

    try {
        if (sim->parsed()) return cmd_simulate(g);
        if (chk_pot->parsed()) return cmd_check_potential(g, theta, ck_eps0, ck_eps1, samples);
        if (chk_ker->parsed()) return cmd_check_kernel(g, trials);
        if (il->parsed()) return cmd_iter_lemma(g, il_c, il_b, il_eps, il_y0, il_n);
        if (cert->parsed()) return cmd_certify(g, cc, cj_opt->count() > 0, cert_tau);
        if (dg->parsed())
            return cmd_degiorgi(g, traj_dir, dg_T, dg_tt, dg_delta, dg_levels, sign,
                                require_decay);
        if (pa->parsed()) return cmd_probe_attractor(g, pa_count, pa_m, pa_tlong, pa_constants);
        if (reg->parsed()) return cmd_regularity(g, reg_trajs, reg_taus, max_beta);
        std::fprintf(stderr, "error: no command given\n");
        return 2;
    } catch (const StepFailure& e) {
        std::fprintf(stderr, "numeric failure: %s (residual %.3e)\n", e.what(), e.residual);
        return 3;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return 2;
    } catch (const CheckFailure& e) {
        std::fprintf(stderr, "check failed: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
