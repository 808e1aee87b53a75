#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qdetect/core_state.hpp"
#include "qdetect/darkbright.hpp"
#include "qdetect/spectral.hpp"

namespace qdetect::cli {

/// lo:hi:n[:log]; n ≥ 1 points, endpoints included.
struct Grid {
    double lo = 0.0;
    double hi = 0.0;
    int n = 1;
    bool log = false;

    std::vector<double> values() const;
};

Grid parse_grid(std::string_view text);

struct RunConfig {
    int n_sites = 6;
    int cut = 3;
    double coupling = 1.0;
    std::string state = "special";
    std::filesystem::path out = ".";
    std::uint64_t seed = 0;
    std::uint64_t trajectories = 100'000;
    std::uint64_t max_measurements = 1'000'000;
    double rate = 1.0;
    std::optional<Grid> r_grid;
    std::optional<Grid> t_grid;
    std::vector<double> r_list;
    std::string protocol = "exp";
    double period = 1.0;
    std::optional<std::filesystem::path> hamiltonian;
    int bins = 400;
    std::optional<double> t_max;
    bool monte_carlo = false;
    double tolerance_scale = 1.0;
    bool inject_a3_sign_flip = false;

    /// Throws std::invalid_argument on out-of-range values.
    void validate() const;
};

/// Flat `key = value` lines; '#' starts a comment; blank lines are skipped.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Applies key/value pairs in order; unknown keys and malformed values throw
/// std::invalid_argument naming the key.
void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& values);

/// Keys accepted by apply_settings().
const std::vector<std::string>& config_keys();

/// Dense Hermitian matrix from a text file: one row per line, entries
/// separated by whitespace, each entry `re` or `re,im`.
CMatrix read_matrix(const std::filesystem::path& path);

/// Resolves an initial-state spec: special, uniform, site(k), eigen(0,l),
/// random-bright(seed) or @file (one amplitude `re` or `re,im` per line).
/// Explicit amplitudes must be normalized to 1e-10.
StateVector make_state(std::string_view spec, const SiteWindow& window, const DarkBrightDecomposition& dec);

double parse_double(std::string_view text, std::string_view what);
std::uint64_t parse_uint(std::string_view text, std::string_view what);

}  // namespace qdetect::cli
