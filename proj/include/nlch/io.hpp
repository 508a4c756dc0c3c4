#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nlch/dynamics.hpp"
#include "nlch/grid.hpp"
#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"

namespace nlch {

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

// flat little-endian float64, row-major
void write_field_f64(const std::string& path, const Field& f);
std::vector<double> read_field_f64(const std::string& path, std::size_t expected_count);

// trajectory directory: phi_NNNNNN.f64 snapshots, meta.json, series.csv
void save_trajectory(const std::string& dir, const Trajectory& traj);
Trajectory load_trajectory(const std::string& dir);

void write_series_csv(const std::string& path, const std::vector<SeriesRow>& rows);
std::vector<SeriesRow> read_series_csv(const std::string& path);

struct Phi0Spec {
    enum class Kind { constant, sine, tanh_profile, random, file };
    Kind kind = Kind::constant;
    double value = 0.0;     // level (constant), amplitude (sine/tanh), sup bound (random)
    double mean = 0.0;      // target mean for random data
    long waves = 1;         // full periods per axis for sine
    std::string path;       // source file for kind = file
    std::uint64_t seed = 0;
};

// deterministic for a fixed Phi0Spec; random data is shifted to hit the
// requested mean exactly and rescaled so sup|phi| <= value
Field make_phi0(const Phi0Spec& s, const Domain& d);

struct RunConfig {
    Domain domain;
    KernelSpec kernel;
    PotentialParams potential;
    Phi0Spec phi0;
    double dt = 1e-3;
    double t_end = 1.0;
    long snapshot_every = 100;
    SolverConfig solver;
    std::uint64_t seed = 0;
    std::string output_dir = "out";
};

// strict parser: unknown keys anywhere in the document are validation errors
RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_json(const RunConfig& c);

// FNV-1a 64 over the file bytes, "fnv1a64:" + 16 hex digits
std::string content_hash_hex(const std::string& path);

// manifest.json: config echo plus per-file content hashes, no timestamps
void write_manifest(const std::string& dir, const RunConfig& c,
                    const std::vector<std::string>& files);

} // namespace nlch
