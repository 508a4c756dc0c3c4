#include "nlch/io.hpp"

#include <algorithm>
#include <bit>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>
#include <set>

#include "json.hpp"

#include "nlch/errors.hpp"

namespace nlch {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "field binaries are little-endian float64");

std::string read_text_file(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw ValidationError("io: cannot open \"" + path + "\" for reading");
    std::string out;
    char buf[65536];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, got);
    std::fclose(f);
    return out;
}

void write_text_file(const std::string& path, const std::string& text) {
    FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw ValidationError("io: cannot open \"" + path + "\" for writing");
    if (std::fwrite(text.data(), 1, text.size(), f) != text.size()) {
        std::fclose(f);
        throw ValidationError("io: short write to \"" + path + "\"");
    }
    std::fclose(f);
}

void write_field_f64(const std::string& path, const Field& f) {
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw ValidationError("io: cannot open \"" + path + "\" for writing");
    const std::size_t n = f.v.size();
    if (std::fwrite(f.v.data(), sizeof(double), n, fp) != n) {
        std::fclose(fp);
        throw ValidationError("io: short write to \"" + path + "\"");
    }
    std::fclose(fp);
}

std::vector<double> read_field_f64(const std::string& path, std::size_t expected_count) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw ValidationError("io: cannot open \"" + path + "\"");
    std::vector<double> v(expected_count);
    const std::size_t got = std::fread(v.data(), sizeof(double), expected_count, fp);
    // a trailing probe read distinguishes short files from oversized ones
    char extra;
    const bool more = std::fread(&extra, 1, 1, fp) == 1;
    std::fclose(fp);
    if (got != expected_count || more)
        throw ValidationError("io: \"" + path + "\" holds " + std::to_string(got) +
                              (more ? "+" : "") + " values, expected " +
                              std::to_string(expected_count));
    for (double x : v)
        if (!std::isfinite(x))
            throw ValidationError("io: non-finite value in \"" + path + "\"");
    return v;
}

static Domain domain_from_lists(int dim, const std::vector<long>& cells,
                                const std::vector<double>& extents, BoundaryMode bc,
                                const std::string& where) {
    if (dim < 1 || dim > 3)
        throw ValidationError(where + ": dim must be 1, 2 or 3");
    if (cells.size() != std::size_t(dim) || extents.size() != std::size_t(dim))
        throw ValidationError(where + ": \"cells\" and \"extents\" must each have dim entries");
    std::array<long, 3> c{1, 1, 1};
    std::array<double, 3> e{1.0, 1.0, 1.0};
    for (int a = 0; a < dim; ++a) {
        c[std::size_t(a)] = cells[std::size_t(a)];
        e[std::size_t(a)] = extents[std::size_t(a)];
    }
    return make_domain(dim, e, c, bc);
}

static std::string snapshot_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "phi_%06zu.f64", i);
    return buf;
}

static std::string boundary_name(BoundaryMode bc) {
    return bc == BoundaryMode::periodic ? "periodic" : "neumann";
}

static BoundaryMode boundary_from(const std::string& s) {
    if (s == "periodic") return BoundaryMode::periodic;
    if (s == "neumann") return BoundaryMode::neumann;
    throw ValidationError("config: boundary must be \"neumann\" or \"periodic\", got \"" + s + "\"");
}

void save_trajectory(const std::string& dir, const Trajectory& traj) {
    fs::create_directories(dir);
    json meta;
    meta["dim"] = traj.domain.dim;
    meta["cells"] = std::vector<long>(traj.domain.cells.begin(),
                                      traj.domain.cells.begin() + traj.domain.dim);
    meta["extents"] = std::vector<double>(traj.domain.extents.begin(),
                                          traj.domain.extents.begin() + traj.domain.dim);
    meta["boundary_mode"] = boundary_name(traj.domain.bc);
    json snaps = json::array();
    for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
        const std::string name = snapshot_name(i);
        write_field_f64(dir + "/" + name, traj.snapshots[i]);
        snaps.push_back({{"file", name},
                         {"time", traj.snapshot_times[i]},
                         {"step", traj.snapshot_steps[i]}});
    }
    meta["snapshots"] = std::move(snaps);
    write_text_file(dir + "/meta.json", meta.dump(2) + "\n");
    write_series_csv(dir + "/series.csv", traj.series);
}

Trajectory load_trajectory(const std::string& dir) {
    json meta;
    try {
        meta = json::parse(read_text_file(dir + "/meta.json"));
    } catch (const json::exception& e) {
        throw ValidationError("io: bad meta.json in \"" + dir + "\": " + e.what());
    }
    Trajectory traj;
    try {
        const int dim = meta.at("dim").get<int>();
        const auto cells = meta.at("cells").get<std::vector<long>>();
        const auto extents = meta.at("extents").get<std::vector<double>>();
        const BoundaryMode bc = boundary_from(meta.at("boundary_mode").get<std::string>());
        traj.domain = domain_from_lists(dim, cells, extents, bc, "meta.json");
        for (const auto& s : meta.at("snapshots")) {
            const std::string file = s.at("file").get<std::string>();
            traj.snapshot_times.push_back(s.at("time").get<double>());
            traj.snapshot_steps.push_back(s.at("step").get<long>());
            Field f(traj.domain);
            f.v = read_field_f64(dir + "/" + file, std::size_t(traj.domain.cell_count()));
            traj.snapshots.push_back(std::move(f));
        }
    } catch (const json::exception& e) {
        throw ValidationError("io: bad meta.json in \"" + dir + "\": " + e.what());
    }
    traj.series = read_series_csv(dir + "/series.csv");
    return traj;
}

static const char* kSeriesHeader =
    "time,energy_form1,energy_form2,mass,sup_abs_phi,min_gap,l2_mu,h1_mu,l2_dtphi";

void write_series_csv(const std::string& path, const std::vector<SeriesRow>& rows) {
    std::string out(kSeriesHeader);
    out.push_back('\n');
    char buf[512];
    for (const SeriesRow& r : rows) {
        std::snprintf(buf, sizeof buf,
                      "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      r.time, r.energy_form1, r.energy_form2, r.mass, r.sup_abs_phi,
                      r.min_gap, r.l2_mu, r.h1_mu, r.l2_dtphi);
        out += buf;
    }
    write_text_file(path, out);
}

std::vector<SeriesRow> read_series_csv(const std::string& path) {
    const std::string text = read_text_file(path);
    std::vector<SeriesRow> rows;
    std::size_t pos = 0;
    bool first = true;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        if (first) {
            if (line != kSeriesHeader)
                throw ValidationError("io: unexpected series.csv header in \"" + path + "\"");
            first = false;
            continue;
        }
        SeriesRow r;
        double* cols[9] = {&r.time, &r.energy_form1, &r.energy_form2, &r.mass,
                           &r.sup_abs_phi, &r.min_gap, &r.l2_mu, &r.h1_mu, &r.l2_dtphi};
        const char* s = line.c_str();
        char* end = nullptr;
        for (int c = 0; c < 9; ++c) {
            *cols[c] = std::strtod(s, &end);
            if (end == s)
                throw ValidationError("io: malformed series.csv row in \"" + path + "\"");
            s = end;
            if (c < 8) {
                if (*s != ',')
                    throw ValidationError("io: malformed series.csv row in \"" + path + "\"");
                ++s;
            }
        }
        rows.push_back(r);
    }
    if (first) throw ValidationError("io: empty series.csv \"" + path + "\"");
    return rows;
}

Field make_phi0(const Phi0Spec& s, const Domain& d) {
    Field f(d);
    switch (s.kind) {
    case Phi0Spec::Kind::constant: {
        if (std::abs(s.value) >= 1.0)
            throw ValidationError("phi0: constant level must satisfy |value| < 1");
        std::fill(f.v.begin(), f.v.end(), s.value);
        break;
    }
    case Phi0Spec::Kind::sine: {
        if (std::abs(s.value) >= 1.0)
            throw ValidationError("phi0: sine amplitude must satisfy |value| < 1");
        if (s.waves < 1) throw ValidationError("phi0: waves must be >= 1");
        for (std::size_t i = 0; i < f.v.size(); ++i) {
            const auto ix = unravel_index(d, long(i));
            double u = s.value;
            for (int a = 0; a < d.dim; ++a)
                u *= std::sin(2.0 * M_PI * double(s.waves) * cell_center(d, a, ix[std::size_t(a)]) /
                              d.extents[std::size_t(a)]);
            f.v[i] = u;
        }
        break;
    }
    case Phi0Spec::Kind::tanh_profile: {
        if (std::abs(s.value) >= 1.0)
            throw ValidationError("phi0: tanh amplitude must satisfy |value| < 1");
        // planar interface across the first axis, width 5% of the extent
        const double mid = 0.5 * d.extents[0];
        const double w = 0.05 * d.extents[0];
        for (std::size_t i = 0; i < f.v.size(); ++i) {
            const auto ix = unravel_index(d, long(i));
            f.v[i] = s.value * std::tanh((cell_center(d, 0, ix[0]) - mid) / w);
        }
        break;
    }
    case Phi0Spec::Kind::random: {
        if (s.value <= 0.0 || s.value >= 1.0)
            throw ValidationError("phi0: random sup bound must lie in (0, 1)");
        if (std::abs(s.mean) >= s.value)
            throw ValidationError("phi0: random mean must satisfy |mean| < value");
        std::mt19937_64 rng(s.seed);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (double& x : f.v) x = uni(rng);
        const double bar = mean(f);
        double sup = 0.0;
        for (double& x : f.v) {
            x -= bar;
            sup = std::max(sup, std::abs(x));
        }
        const double scale = sup > 0.0 ? (s.value - std::abs(s.mean)) / sup : 0.0;
        for (double& x : f.v) x = s.mean + scale * x;
        break;
    }
    case Phi0Spec::Kind::file: {
        f.v = read_field_f64(s.path, std::size_t(d.cell_count()));
        break;
    }
    }
    return f;
}

// ---- config parsing ----

static void reject_unknown(const json& obj, const std::set<std::string>& known,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key()))
            throw ValidationError("config: unknown key \"" + it.key() + "\" in " + where);
}

static double get_num(const json& obj, const char* key, const std::string& where) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number())
        throw ValidationError("config: " + where + " needs numeric \"" + key + "\"");
    return it->get<double>();
}

static Domain parse_domain(const json& j) {
    if (!j.is_object()) throw ValidationError("config: \"domain\" must be an object");
    reject_unknown(j, {"dim", "cells", "extents", "boundary"}, "domain");
    const int dim = static_cast<int>(get_num(j, "dim", "domain"));
    std::vector<long> cells;
    std::vector<double> extents;
    try {
        cells = j.at("cells").get<std::vector<long>>();
        extents = j.at("extents").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw ValidationError("config: domain needs \"cells\" and \"extents\" arrays");
    }
    BoundaryMode bc = BoundaryMode::neumann;
    if (j.contains("boundary")) bc = boundary_from(j.at("boundary").get<std::string>());
    return domain_from_lists(dim, cells, extents, bc, "domain");
}

static KernelSpec parse_kernel(const json& j) {
    if (!j.is_object() || !j.contains("type"))
        throw ValidationError("config: \"kernel\" must be an object with a \"type\"");
    const std::string type = j.at("type").get<std::string>();
    if (type == "gaussian") {
        reject_unknown(j, {"type", "sigma", "amplitude"}, "kernel");
        GaussianSpec g;
        if (j.contains("sigma")) g.sigma = get_num(j, "sigma", "kernel");
        if (j.contains("amplitude")) g.amplitude = get_num(j, "amplitude", "kernel");
        return g;
    }
    if (type == "bump") {
        reject_unknown(j, {"type", "r0", "amplitude"}, "kernel");
        CompactBumpSpec b;
        if (j.contains("r0")) b.r0 = get_num(j, "r0", "kernel");
        if (j.contains("amplitude")) b.amplitude = get_num(j, "amplitude", "kernel");
        return b;
    }
    if (type == "tabulated") {
        reject_unknown(j, {"type", "path"}, "kernel");
        TabulatedKernelSpec t;
        if (!j.contains("path"))
            throw ValidationError("config: tabulated kernel needs \"path\"");
        t.path = j.at("path").get<std::string>();
        return t;
    }
    throw ValidationError("config: unknown kernel type \"" + type + "\"");
}

static PotentialParams parse_potential(const json& j) {
    if (!j.is_object()) throw ValidationError("config: \"potential\" must be an object");
    reject_unknown(j, {"theta", "eps0", "eps1", "c_f"}, "potential");
    PotentialParams p;
    if (j.contains("theta")) p.theta = get_num(j, "theta", "potential");
    if (j.contains("eps0")) p.eps0 = get_num(j, "eps0", "potential");
    if (j.contains("eps1")) p.eps1 = get_num(j, "eps1", "potential");
    if (j.contains("c_f")) p.c_f = get_num(j, "c_f", "potential");
    validate(p);
    return p;
}

static Phi0Spec parse_phi0(const json& j) {
    if (!j.is_object() || !j.contains("kind"))
        throw ValidationError("config: \"phi0\" must be an object with a \"kind\"");
    Phi0Spec s;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "constant") {
        reject_unknown(j, {"kind", "value"}, "phi0");
        s.kind = Phi0Spec::Kind::constant;
        s.value = get_num(j, "value", "phi0");
    } else if (kind == "sine") {
        reject_unknown(j, {"kind", "value", "waves"}, "phi0");
        s.kind = Phi0Spec::Kind::sine;
        s.value = get_num(j, "value", "phi0");
        if (j.contains("waves")) s.waves = static_cast<long>(get_num(j, "waves", "phi0"));
    } else if (kind == "tanh") {
        reject_unknown(j, {"kind", "value"}, "phi0");
        s.kind = Phi0Spec::Kind::tanh_profile;
        s.value = get_num(j, "value", "phi0");
    } else if (kind == "random") {
        reject_unknown(j, {"kind", "value", "mean", "seed"}, "phi0");
        s.kind = Phi0Spec::Kind::random;
        s.value = get_num(j, "value", "phi0");
        if (j.contains("mean")) s.mean = get_num(j, "mean", "phi0");
        if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
    } else if (kind == "file") {
        reject_unknown(j, {"kind", "path"}, "phi0");
        s.kind = Phi0Spec::Kind::file;
        if (!j.contains("path")) throw ValidationError("config: phi0 file needs \"path\"");
        s.path = j.at("path").get<std::string>();
    } else {
        throw ValidationError("config: unknown phi0 kind \"" + kind + "\"");
    }
    return s;
}

static SolverConfig parse_solver(const json& j) {
    if (!j.is_object()) throw ValidationError("config: \"solver\" must be an object");
    reject_unknown(j, {"newton_tol", "newton_max_iter", "cg_tol", "cg_max_iter", "max_halvings"},
                   "solver");
    SolverConfig s;
    if (j.contains("newton_tol")) s.newton_tol = get_num(j, "newton_tol", "solver");
    if (j.contains("newton_max_iter"))
        s.newton_max_iter = static_cast<int>(get_num(j, "newton_max_iter", "solver"));
    if (j.contains("cg_tol")) s.cg_tol = get_num(j, "cg_tol", "solver");
    if (j.contains("cg_max_iter"))
        s.cg_max_iter = static_cast<int>(get_num(j, "cg_max_iter", "solver"));
    if (j.contains("max_halvings"))
        s.max_halvings = static_cast<int>(get_num(j, "max_halvings", "solver"));
    if (s.newton_tol <= 0 || s.cg_tol <= 0)
        throw ValidationError("config: solver tolerances must be positive");
    if (s.newton_max_iter < 1 || s.cg_max_iter < 1 || s.max_halvings < 0)
        throw ValidationError("config: solver iteration caps out of range");
    return s;
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");
    reject_unknown(j,
                   {"domain", "kernel", "potential", "phi0", "dt", "t_end", "snapshot_every",
                    "solver", "seed", "output_dir"},
                   "run config");
    for (const char* req : {"domain", "kernel", "phi0", "dt", "t_end"})
        if (!j.contains(req))
            throw ValidationError(std::string("config: missing required key \"") + req + "\"");

    RunConfig c;
    c.domain = parse_domain(j.at("domain"));
    c.kernel = parse_kernel(j.at("kernel"));
    if (j.contains("potential")) c.potential = parse_potential(j.at("potential"));
    c.phi0 = parse_phi0(j.at("phi0"));
    c.dt = get_num(j, "dt", "run config");
    c.t_end = get_num(j, "t_end", "run config");
    if (!(c.dt > 0.0) || !std::isfinite(c.dt))
        throw ValidationError("config: \"dt\" must be positive");
    if (!(c.t_end >= c.dt) || !std::isfinite(c.t_end))
        throw ValidationError("config: \"t_end\" must be at least one step");
    if (j.contains("snapshot_every")) {
        c.snapshot_every = static_cast<long>(get_num(j, "snapshot_every", "run config"));
        if (c.snapshot_every < 1)
            throw ValidationError("config: \"snapshot_every\" must be >= 1");
    }
    if (j.contains("solver")) c.solver = parse_solver(j.at("solver"));
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
    if (c.phi0.kind == Phi0Spec::Kind::random && !j.at("phi0").contains("seed"))
        c.phi0.seed = c.seed;
    return c;
}

RunConfig load_run_config(const std::string& path) {
    return parse_run_config(read_text_file(path));
}

static json kernel_json(const KernelSpec& k) {
    json j;
    if (const auto* g = std::get_if<GaussianSpec>(&k)) {
        j["type"] = "gaussian";
        j["sigma"] = g->sigma;
        j["amplitude"] = g->amplitude;
    } else if (const auto* b = std::get_if<CompactBumpSpec>(&k)) {
        j["type"] = "bump";
        j["r0"] = b->r0;
        j["amplitude"] = b->amplitude;
    } else {
        j["type"] = "tabulated";
        j["path"] = std::get<TabulatedKernelSpec>(k).path;
    }
    return j;
}

static json phi0_json(const Phi0Spec& s) {
    json j;
    switch (s.kind) {
    case Phi0Spec::Kind::constant:
        j["kind"] = "constant";
        j["value"] = s.value;
        break;
    case Phi0Spec::Kind::sine:
        j["kind"] = "sine";
        j["value"] = s.value;
        j["waves"] = s.waves;
        break;
    case Phi0Spec::Kind::tanh_profile:
        j["kind"] = "tanh";
        j["value"] = s.value;
        break;
    case Phi0Spec::Kind::random:
        j["kind"] = "random";
        j["value"] = s.value;
        j["mean"] = s.mean;
        j["seed"] = s.seed;
        break;
    case Phi0Spec::Kind::file:
        j["kind"] = "file";
        j["path"] = s.path;
        break;
    }
    return j;
}

std::string run_config_json(const RunConfig& c) {
    json j;
    j["domain"] = {{"dim", c.domain.dim},
                   {"cells", std::vector<long>(c.domain.cells.begin(),
                                               c.domain.cells.begin() + c.domain.dim)},
                   {"extents", std::vector<double>(c.domain.extents.begin(),
                                                   c.domain.extents.begin() + c.domain.dim)},
                   {"boundary", boundary_name(c.domain.bc)}};
    j["kernel"] = kernel_json(c.kernel);
    j["potential"] = {{"theta", c.potential.theta},
                      {"eps0", c.potential.eps0},
                      {"eps1", c.potential.eps1},
                      {"c_f", c.potential.c_f}};
    j["phi0"] = phi0_json(c.phi0);
    j["dt"] = c.dt;
    j["t_end"] = c.t_end;
    j["snapshot_every"] = c.snapshot_every;
    j["solver"] = {{"newton_tol", c.solver.newton_tol},
                   {"newton_max_iter", c.solver.newton_max_iter},
                   {"cg_tol", c.solver.cg_tol},
                   {"cg_max_iter", c.solver.cg_max_iter},
                   {"max_halvings", c.solver.max_halvings}};
    j["seed"] = c.seed;
    j["output_dir"] = c.output_dir;
    return j.dump(2) + "\n";
}

std::string content_hash_hex(const std::string& path) {
    FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw ValidationError("io: cannot hash missing file \"" + path + "\"");
    std::uint64_t h = 0xcbf29ce484222325ull;
    unsigned char buf[65536];
    std::size_t got;
    while ((got = std::fread(buf, 1, sizeof buf, f)) > 0)
        for (std::size_t i = 0; i < got; ++i) {
            h ^= buf[i];
            h *= 0x100000001b3ull;
        }
    std::fclose(f);
    char out[32];
    std::snprintf(out, sizeof out, "fnv1a64:%016" PRIx64, h);
    return out;
}

void write_manifest(const std::string& dir, const RunConfig& c,
                    const std::vector<std::string>& files) {
    json m;
    m["config"] = json::parse(run_config_json(c));
    json outs;
    for (const std::string& name : files) outs[name] = content_hash_hex(dir + "/" + name);
    m["outputs"] = std::move(outs);
    write_text_file(dir + "/manifest.json", m.dump(2) + "\n");
}

} // namespace nlch
