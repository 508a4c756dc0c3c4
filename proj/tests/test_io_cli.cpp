#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "nlch/dynamics.hpp"
#include "nlch/errors.hpp"
#include "nlch/grid.hpp"
#include "nlch/io.hpp"
#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"

using namespace nlch;
namespace fs = std::filesystem;

namespace {

std::string tmp_dir(const std::string& leaf) {
    const fs::path p = fs::path("io_cli_tmp") / leaf;
    fs::remove_all(p);
    fs::create_directories(p);
    return p.string();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(NLCH_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(rc != -1);
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

const char* kSmallConfig = R"({
  "domain": {"dim": 1, "cells": [32], "extents": [1.0], "boundary": "neumann"},
  "kernel": {"type": "gaussian", "sigma": 0.1, "amplitude": 1.0},
  "potential": {"theta": 1.0},
  "phi0": {"kind": "sine", "value": 0.5},
  "dt": 1e-3,
  "t_end": 0.05,
  "snapshot_every": 10,
  "seed": 7
})";

} // namespace

TEST_SUITE("io_cli") {

// ---- binary fields ----------------------------------------------------------

TEST_CASE("field files round-trip bit for bit") {
    const std::string dir = tmp_dir("f64");
    const Domain d = make_domain(1, {1.0, 0, 0}, {6, 0, 0}, BoundaryMode::neumann);
    Field f(d);
    f.v = {0.0, -1.0, 1e-308, 0.1 + 0.2, -3.5e11, 0.9999999999999999};
    write_field_f64(dir + "/a.f64", f);
    const std::vector<double> back = read_field_f64(dir + "/a.f64", 6);
    CHECK(back == f.v);

    CHECK_THROWS_AS(read_field_f64(dir + "/a.f64", 5), ValidationError);
    CHECK_THROWS_AS(read_field_f64(dir + "/a.f64", 7), ValidationError);
    CHECK_THROWS_AS(read_field_f64(dir + "/missing.f64", 6), ValidationError);

    Field bad = f;
    bad.v[2] = std::nan("");
    write_field_f64(dir + "/bad.f64", bad);
    CHECK_THROWS_AS(read_field_f64(dir + "/bad.f64", 6), ValidationError);
}

// ---- series csv -------------------------------------------------------------

TEST_CASE("series csv preserves every double") {
    const std::string dir = tmp_dir("csv");
    std::vector<SeriesRow> rows(3);
    rows[0].time = 0.0;
    rows[1].time = 1e-3;
    rows[2].time = 2e-3;
    rows[1].energy_form1 = -0.12345678901234567;
    rows[1].energy_form2 = -0.12345678901234566;
    rows[1].mass = 1.0 / 3.0;
    rows[1].sup_abs_phi = 0.99999999999999989;
    rows[1].min_gap = 1.1102230246251565e-16;
    rows[1].l2_mu = 3.14159265358979312;
    rows[1].h1_mu = 2.71828182845904509;
    rows[1].l2_dtphi = 1e-300;
    write_series_csv(dir + "/series.csv", rows);
    const std::vector<SeriesRow> back = read_series_csv(dir + "/series.csv");
    REQUIRE(back.size() == 3);
    CHECK(back[1].energy_form1 == rows[1].energy_form1);
    CHECK(back[1].energy_form2 == rows[1].energy_form2);
    CHECK(back[1].mass == rows[1].mass);
    CHECK(back[1].sup_abs_phi == rows[1].sup_abs_phi);
    CHECK(back[1].min_gap == rows[1].min_gap);
    CHECK(back[1].l2_mu == rows[1].l2_mu);
    CHECK(back[1].h1_mu == rows[1].h1_mu);
    CHECK(back[1].l2_dtphi == rows[1].l2_dtphi);

    // tampered header is rejected
    std::string text = read_text_file(dir + "/series.csv");
    text[0] = 'T';
    write_text_file(dir + "/bad.csv", text);
    CHECK_THROWS_AS(read_series_csv(dir + "/bad.csv"), ValidationError);
}

// ---- initial data -----------------------------------------------------------

TEST_CASE("initial data kinds") {
    const Domain d = make_domain(1, {1.0, 0, 0}, {64, 0, 0}, BoundaryMode::periodic);

    Phi0Spec c;
    c.kind = Phi0Spec::Kind::constant;
    c.value = 0.3;
    const Field fc = make_phi0(c, d);
    for (double x : fc.v) CHECK(x == 0.3);
    c.value = 1.0;
    CHECK_THROWS_AS(make_phi0(c, d), ValidationError);

    Phi0Spec s;
    s.kind = Phi0Spec::Kind::sine;
    s.value = 0.5;
    const Field fsin = make_phi0(s, d);
    CHECK(norm_linf(fsin) <= 0.5 + 1e-15);
    CHECK(norm_linf(fsin) > 0.4);
    CHECK(std::abs(mean(fsin)) <= 1e-13);

    Phi0Spec t;
    t.kind = Phi0Spec::Kind::tanh_profile;
    t.value = 0.99;
    const Field ft = make_phi0(t, d);
    CHECK(norm_linf(ft) <= 0.99 + 1e-15);
    CHECK(norm_linf(ft) > 0.9);

    Phi0Spec r;
    r.kind = Phi0Spec::Kind::random;
    r.value = 0.9;
    r.mean = 0.2;
    r.seed = 42;
    const Field fr = make_phi0(r, d);
    CHECK(std::abs(mean(fr) - 0.2) <= 1e-12);
    CHECK(norm_linf(fr) <= 0.9 + 1e-12);
    const Field fr2 = make_phi0(r, d);
    CHECK(fr.v == fr2.v);
    r.seed = 43;
    CHECK(make_phi0(r, d).v != fr.v);
    r.mean = 0.95; // |mean| must stay below the sup bound
    CHECK_THROWS_AS(make_phi0(r, d), ValidationError);

    const std::string dir = tmp_dir("phi0");
    write_field_f64(dir + "/init.f64", fr);
    Phi0Spec ff;
    ff.kind = Phi0Spec::Kind::file;
    ff.path = dir + "/init.f64";
    CHECK(make_phi0(ff, d).v == fr.v);
}

// ---- config parsing ---------------------------------------------------------

TEST_CASE("run config parses and round-trips") {
    const RunConfig c = parse_run_config(kSmallConfig);
    CHECK(c.domain.dim == 1);
    CHECK(c.domain.cells[0] == 32);
    CHECK(c.domain.bc == BoundaryMode::neumann);
    CHECK(std::get<GaussianSpec>(c.kernel).sigma == 0.1);
    CHECK(c.potential.theta == 1.0);
    CHECK(c.phi0.kind == Phi0Spec::Kind::sine);
    CHECK(c.phi0.value == 0.5);
    CHECK(c.dt == 1e-3);
    CHECK(c.t_end == 0.05);
    CHECK(c.snapshot_every == 10);
    CHECK(c.seed == 7);

    const RunConfig back = parse_run_config(run_config_json(c));
    CHECK(back.domain.cells == c.domain.cells);
    CHECK(back.dt == c.dt);
    CHECK(back.t_end == c.t_end);
    CHECK(back.seed == c.seed);
    CHECK(std::get<GaussianSpec>(back.kernel).amplitude ==
          std::get<GaussianSpec>(c.kernel).amplitude);
    CHECK(back.phi0.kind == c.phi0.kind);
}

TEST_CASE("run config rejects unknown and missing keys") {
    try {
        parse_run_config(R"({"domain": {"dim": 1, "cells": [8], "extents": [1.0]},
                             "kernel": {"type": "gaussian"},
                             "phi0": {"kind": "constant", "value": 0.1},
                             "dt": 1e-3, "t_end": 1e-2, "speling_mistake": 3})");
        FAIL("unknown top-level key accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }
    try {
        parse_run_config(R"({"domain": {"dim": 1, "cells": [8], "extents": [1.0]},
                             "kernel": {"type": "gaussian", "sugma": 0.1},
                             "phi0": {"kind": "constant", "value": 0.1},
                             "dt": 1e-3, "t_end": 1e-2})");
        FAIL("unknown nested key accepted");
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("unknown key") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_run_config(R"({"domain": {"dim": 1, "cells": [8], "extents": [1.0]},
                                         "kernel": {"type": "gaussian"},
                                         "phi0": {"kind": "constant", "value": 0.1},
                                         "dt": 1e-3})"),
                    ValidationError); // missing t_end
    CHECK_THROWS_AS(parse_run_config("not json at all"), ValidationError);
    CHECK_THROWS_AS(parse_run_config(R"({"domain": {"dim": 1, "cells": [8], "extents": [1.0]},
                                         "kernel": {"type": "gaussian"},
                                         "phi0": {"kind": "constant", "value": 0.1},
                                         "dt": -1e-3, "t_end": 1.0})"),
                    ValidationError);
}

TEST_CASE("random initial data inherits the run seed unless pinned") {
    const char* base = R"({"domain": {"dim": 1, "cells": [8], "extents": [1.0]},
                           "kernel": {"type": "gaussian"},
                           "phi0": {"kind": "random", "value": 0.5%s},
                           "dt": 1e-3, "t_end": 1e-2, "seed": 99})";
    char buf[512];
    std::snprintf(buf, sizeof buf, base, "");
    CHECK(parse_run_config(buf).phi0.seed == 99);
    std::snprintf(buf, sizeof buf, base, ", \"seed\": 5");
    CHECK(parse_run_config(buf).phi0.seed == 5);
}

// ---- trajectory store -------------------------------------------------------

TEST_CASE("trajectory directories round-trip") {
    const std::string dir = tmp_dir("traj");
    const Domain d = make_domain(2, {1.0, 1.0, 0}, {8, 8, 0}, BoundaryMode::periodic);
    const Kernel k = build_kernel(GaussianSpec{0.15, 1.0}, d);
    const PotentialParams p;
    Phi0Spec r;
    r.kind = Phi0Spec::Kind::random;
    r.value = 0.6;
    r.seed = 11;
    const Trajectory tr = simulate(make_phi0(r, d), p, k, 1e-3, 0.01, 5, SolverConfig{});
    save_trajectory(dir, tr);
    const Trajectory back = load_trajectory(dir);
    CHECK(back.domain.dim == 2);
    CHECK(back.domain.bc == BoundaryMode::periodic);
    REQUIRE(back.snapshots.size() == tr.snapshots.size());
    for (std::size_t i = 0; i < tr.snapshots.size(); ++i)
        CHECK(back.snapshots[i].v == tr.snapshots[i].v);
    CHECK(back.snapshot_times == tr.snapshot_times);
    CHECK(back.snapshot_steps == tr.snapshot_steps);
    REQUIRE(back.series.size() == tr.series.size());
    CHECK(back.series.back().energy_form1 == tr.series.back().energy_form1);
    CHECK_THROWS_AS(load_trajectory(dir + "/nope"), ValidationError);
}

// ---- manifest ---------------------------------------------------------------

TEST_CASE("content hash is FNV-1a over the bytes") {
    const std::string dir = tmp_dir("hash");
    const std::string payload = "nonlocal";
    write_text_file(dir + "/x.bin", payload);

    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char b : payload) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    char expect[32];
    std::snprintf(expect, sizeof expect, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
    CHECK(content_hash_hex(dir + "/x.bin") == expect);
    CHECK(content_hash_hex(dir + "/x.bin") == content_hash_hex(dir + "/x.bin"));
    write_text_file(dir + "/y.bin", "nonlocal!");
    CHECK(content_hash_hex(dir + "/y.bin") != content_hash_hex(dir + "/x.bin"));
}

TEST_CASE("manifest echoes the config and hashes the files") {
    const std::string dir = tmp_dir("manifest");
    write_text_file(dir + "/data.txt", "abc");
    const RunConfig c = parse_run_config(kSmallConfig);
    write_manifest(dir, c, {"data.txt"});
    const nlohmann::json m = nlohmann::json::parse(read_text_file(dir + "/manifest.json"));
    REQUIRE(m.contains("config"));
    REQUIRE(m.contains("outputs"));
    CHECK(m.at("config").at("dt").get<double>() == 1e-3);
    CHECK(m.at("outputs").at("data.txt").get<std::string>() ==
          content_hash_hex(dir + "/data.txt"));
    CHECK_FALSE(m.contains("timestamp"));
    CHECK(m.dump().find("time_stamp") == std::string::npos);
}

// ---- command line -----------------------------------------------------------

TEST_CASE("cli: simulate runs, is deterministic, and reports failures") {
    const std::string dir = tmp_dir("cli_sim");
    write_text_file(dir + "/cfg.json", kSmallConfig);

    CHECK(run_cli("simulate --config " + dir + "/cfg.json --out " + dir + "/run1") == 0);
    const std::vector<SeriesRow> rows = read_series_csv(dir + "/run1/series.csv");
    CHECK(rows.size() == 51); // floor(t_end/dt) + 1
    CHECK(fs::exists(dir + "/run1/meta.json"));
    CHECK(fs::exists(dir + "/run1/manifest.json"));
    CHECK(fs::exists(dir + "/run1/phi_000000.f64"));

    CHECK(run_cli("simulate --config " + dir + "/cfg.json --out " + dir + "/run2") == 0);
    CHECK(read_text_file(dir + "/run1/series.csv") == read_text_file(dir + "/run2/series.csv"));

    // a pure phase cannot satisfy a strict interior mean
    std::string bad = kSmallConfig;
    const auto pos = bad.find("\"sine\", \"value\": 0.5");
    REQUIRE(pos != std::string::npos);
    bad.replace(pos, std::string("\"sine\", \"value\": 0.5").size(),
                "\"constant\", \"value\": 1.0");
    write_text_file(dir + "/bad.json", bad);
    CHECK(run_cli("simulate --config " + dir + "/bad.json --out " + dir + "/run3") == 2);

    CHECK(run_cli("simulate --config " + dir + "/missing.json") == 2);
    CHECK(run_cli("simulate --definitely-not-a-flag") == 2);
}

TEST_CASE("cli: analysis commands") {
    const std::string dir = tmp_dir("cli_checks");

    CHECK(run_cli("check-potential --theta 1.0 --out " + dir) == 0);
    const nlohmann::json jp = nlohmann::json::parse(read_text_file(dir + "/check_potential.json"));
    CHECK(jp.at("all_ok").get<bool>());
    CHECK(run_cli("check-potential --theta -1.0 --out " + dir) == 2);

    CHECK(run_cli("iter-lemma --out " + dir) == 0); // worked example defaults
    const nlohmann::json ji = nlohmann::json::parse(read_text_file(dir + "/iter_lemma.json"));
    CHECK(ji.at("precondition_ok").get<bool>());
    CHECK(ji.at("conclusion_ok").get<bool>());
    CHECK(fs::exists(dir + "/iter_lemma.csv"));
    CHECK(run_cli("iter-lemma --y0 0.9 --out " + dir) == 0); // precondition off, not a failure
    const nlohmann::json ji2 = nlohmann::json::parse(read_text_file(dir + "/iter_lemma.json"));
    CHECK_FALSE(ji2.at("precondition_ok").get<bool>());

    CHECK(run_cli("certify --out " + dir) == 0);
    const nlohmann::json jc = nlohmann::json::parse(read_text_file(dir + "/certify.json"));
    CHECK(jc.at("feasible").get<bool>());
    CHECK(jc.at("sound").get<bool>());
}

TEST_CASE("cli: level-set scan of a steady run") {
    const std::string dir = tmp_dir("cli_dg");
    const char* cfg = R"({
      "domain": {"dim": 1, "cells": [16], "extents": [1.0], "boundary": "periodic"},
      "kernel": {"type": "gaussian", "sigma": 0.1, "amplitude": 1.0},
      "phi0": {"kind": "constant", "value": 0.3},
      "dt": 1e-2, "t_end": 0.6, "snapshot_every": 1
    })";
    write_text_file(dir + "/cfg.json", cfg);
    REQUIRE(run_cli("simulate --config " + dir + "/cfg.json --out " + dir + "/run") == 0);
    CHECK(run_cli("degiorgi --traj " + dir + "/run --require-decay") == 0);
    const nlohmann::json jd = nlohmann::json::parse(read_text_file(dir + "/run/degiorgi.json"));
    CHECK(jd.at("nesting_ok").get<bool>());
    CHECK(jd.at("decayed").get<bool>());
    CHECK(fs::exists(dir + "/run/degiorgi.csv"));
    CHECK(run_cli("degiorgi --traj " + dir + "/nope") == 2);
}

} // TEST_SUITE
