#include "qdetect/cli/run_config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qdetect/philox.hpp"

namespace qdetect::cli {

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep)
{
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        parts.push_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return parts;
}

Complex parse_complex(std::string_view text)
{
    const auto parts = split(text, ',');
    if (parts.size() == 1) return {parse_double(parts[0], "amplitude"), 0.0};
    if (parts.size() == 2) return {parse_double(parts[0], "amplitude"), parse_double(parts[1], "amplitude")};
    throw std::invalid_argument("malformed complex entry '" + std::string(text) + "'");
}

bool parse_bool(std::string_view text, std::string_view what)
{
    if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
    if (text == "false" || text == "0" || text == "no" || text == "off") return false;
    throw std::invalid_argument(std::string(what) + ": expected a boolean, got '" + std::string(text) + "'");
}

int parse_int(std::string_view text, std::string_view what)
{
    const std::uint64_t v = parse_uint(text, what);
    if (v > 1'000'000'000u) throw std::invalid_argument(std::string(what) + ": value too large");
    return static_cast<int>(v);
}

// Argument of name(arg), or nullopt if `spec` is not of that form.
std::optional<std::string_view> call_argument(std::string_view spec, std::string_view name)
{
    if (spec.size() < name.size() + 2 || spec.substr(0, name.size()) != name || spec[name.size()] != '(' ||
        spec.back() != ')') {
        return std::nullopt;
    }
    return trim(spec.substr(name.size() + 1, spec.size() - name.size() - 2));
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Non-comment, non-blank lines.
std::vector<std::string> content_lines(const std::filesystem::path& path)
{
    std::vector<std::string> lines;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        std::string_view view = line;
        view = trim(view.substr(0, view.find('#')));
        if (!view.empty()) lines.emplace_back(view);
    }
    return lines;
}

}  // namespace

double parse_double(std::string_view text, std::string_view what)
{
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw std::invalid_argument(std::string(what) + ": expected a number, got '" + std::string(text) + "'");
    }
    return v;
}

std::uint64_t parse_uint(std::string_view text, std::string_view what)
{
    text = trim(text);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
        throw std::invalid_argument(std::string(what) + ": expected a non-negative integer, got '" +
                                    std::string(text) + "'");
    }
    return v;
}

std::vector<double> Grid::values() const
{
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (int k = 0; k < n; ++k) {
        const double f = double(k) / double(n - 1);
        out[k] = log ? std::pow(10.0, std::log10(lo) + f * (std::log10(hi) - std::log10(lo))) : lo + f * (hi - lo);
    }
    out.front() = lo;
    out.back() = hi;
    return out;
}

Grid parse_grid(std::string_view text)
{
    const auto parts = split(text, ':');
    if (parts.size() != 3 && parts.size() != 4) {
        throw std::invalid_argument("grid must be lo:hi:n[:log], got '" + std::string(text) + "'");
    }
    Grid g;
    g.lo = parse_double(parts[0], "grid lo");
    g.hi = parse_double(parts[1], "grid hi");
    g.n = parse_int(parts[2], "grid n");
    if (parts.size() == 4) {
        if (parts[3] != "log" && parts[3] != "lin") throw std::invalid_argument("grid spacing must be log or lin");
        g.log = parts[3] == "log";
    }
    if (g.n < 1) throw std::invalid_argument("grid needs at least one point");
    if (!std::isfinite(g.lo) || !std::isfinite(g.hi) || g.hi < g.lo) {
        throw std::invalid_argument("grid needs finite lo <= hi");
    }
    if (g.log && !(g.lo > 0.0)) throw std::invalid_argument("log grid needs lo > 0");
    return g;
}

void RunConfig::validate() const
{
    if (!hamiltonian && n_sites < 2) throw std::invalid_argument("N must be at least 2");
    if (cut < 1) throw std::invalid_argument("m must be at least 1");
    if (!hamiltonian && cut >= n_sites) throw std::invalid_argument("m must be below N");
    if (!std::isfinite(coupling) || coupling == 0.0) throw std::invalid_argument("J must be finite and nonzero");
    if (!(rate > 0.0) || !std::isfinite(rate)) throw std::invalid_argument("r must be positive");
    for (double r : r_list) {
        if (!(r > 0.0)) throw std::invalid_argument("r_list entries must be positive");
    }
    if (r_grid && !(r_grid->lo > 0.0)) throw std::invalid_argument("r grid must be positive");
    if (t_grid && t_grid->lo < 0.0) throw std::invalid_argument("t grid must be non-negative");
    if (protocol != "exp" && protocol != "sharp") throw std::invalid_argument("protocol must be exp or sharp");
    if (!(period > 0.0)) throw std::invalid_argument("period must be positive");
    if (trajectories < 1) throw std::invalid_argument("trajectories must be positive");
    if (max_measurements < 1) throw std::invalid_argument("max_measurements must be positive");
    if (bins < 1) throw std::invalid_argument("bins must be positive");
    if (t_max && !(*t_max > 0.0)) throw std::invalid_argument("t_max must be positive");
    if (!(tolerance_scale > 0.0)) throw std::invalid_argument("tolerance_scale must be positive");
}

const std::vector<std::string>& config_keys()
{
    static const std::vector<std::string> keys = {
        "N",      "m",       "J",       "state",   "out",         "seed",  "trajectories", "max_measurements",
        "r",      "r_grid",  "t_grid",  "r_list",  "protocol",    "period", "hamiltonian", "bins",
        "t_max",  "monte_carlo", "tolerance_scale"};
    return keys;
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path)
{
    std::map<std::string, std::string> values;
    int line_no = 0;
    std::istringstream in(read_file(path));
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        view = trim(view.substr(0, view.find('#')));
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key(trim(view.substr(0, eq)));
        if (key.empty()) throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": empty key");
        values[key] = std::string(trim(view.substr(eq + 1)));
    }
    return values;
}

void apply_settings(RunConfig& cfg, const std::map<std::string, std::string>& values)
{
    for (const auto& [key, value] : values) {
        if (key == "N") {
            cfg.n_sites = parse_int(value, key);
        } else if (key == "m") {
            cfg.cut = parse_int(value, key);
        } else if (key == "J") {
            cfg.coupling = parse_double(value, key);
        } else if (key == "state") {
            cfg.state = value;
        } else if (key == "out") {
            cfg.out = value;
        } else if (key == "seed") {
            cfg.seed = parse_uint(value, key);
        } else if (key == "trajectories") {
            cfg.trajectories = parse_uint(value, key);
        } else if (key == "max_measurements") {
            cfg.max_measurements = parse_uint(value, key);
        } else if (key == "r") {
            cfg.rate = parse_double(value, key);
        } else if (key == "r_grid") {
            cfg.r_grid = parse_grid(value);
        } else if (key == "t_grid") {
            cfg.t_grid = parse_grid(value);
        } else if (key == "r_list") {
            cfg.r_list.clear();
            for (auto part : split(value, ',')) cfg.r_list.push_back(parse_double(part, key));
        } else if (key == "protocol") {
            cfg.protocol = value;
        } else if (key == "period") {
            cfg.period = parse_double(value, key);
        } else if (key == "hamiltonian") {
            if (value.empty()) {
                cfg.hamiltonian.reset();
            } else {
                cfg.hamiltonian = value;
            }
        } else if (key == "bins") {
            cfg.bins = parse_int(value, key);
        } else if (key == "t_max") {
            cfg.t_max = parse_double(value, key);
        } else if (key == "monte_carlo") {
            cfg.monte_carlo = parse_bool(value, key);
        } else if (key == "tolerance_scale") {
            cfg.tolerance_scale = parse_double(value, key);
        } else {
            throw std::invalid_argument("unknown configuration key '" + key + "'");
        }
    }
}

CMatrix read_matrix(const std::filesystem::path& path)
{
    std::vector<std::vector<Complex>> rows;
    for (const auto& line : content_lines(path)) {
        std::vector<Complex> row;
        std::istringstream tokens(line);
        std::string token;
        while (tokens >> token) row.push_back(parse_complex(token));
        rows.push_back(std::move(row));
    }
    const auto n = rows.size();
    if (n == 0) throw std::invalid_argument(path.string() + ": empty matrix");
    CMatrix h(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (rows[i].size() != n) throw std::invalid_argument(path.string() + ": matrix is not square");
        for (std::size_t j = 0; j < n; ++j) h(i, j) = rows[i][j];
    }
    return h;
}

StateVector make_state(std::string_view spec, const SiteWindow& window, const DarkBrightDecomposition& dec)
{
    spec = trim(spec);
    const int n = window.n_sites();
    if (spec == "special") return special_state(window);
    if (spec == "uniform") return uniform_state(n);
    if (auto arg = call_argument(spec, "site")) return StateVector::site(n, parse_int(*arg, "site"));
    if (auto arg = call_argument(spec, "eigen")) {
        const auto parts = split(*arg, ',');
        if (parts.size() != 2 || parse_int(parts[0], "eigen") != 0) {
            throw std::invalid_argument("eigen preset must be eigen(0,l)");
        }
        return zero_mode(n, parse_int(parts[1], "eigen"));
    }
    if (auto arg = call_argument(spec, "random-bright")) {
        PhiloxStream rng(parse_uint(*arg, "random-bright"), 0);
        CVector amps = CVector::Zero(n);
        for (const auto& b : dec.bright_basis) {
            const double re = rng.normal();
            const double im = rng.normal();
            amps += Complex(re, im) * b.amplitudes();
        }
        return StateVector::unnormalized(amps).normalize();
    }
    if (!spec.empty() && spec.front() == '@') {
        const std::filesystem::path path(std::string(spec.substr(1)));
        const auto lines = content_lines(path);
        if (static_cast<int>(lines.size()) != n) {
            throw std::invalid_argument(path.string() + ": expected " + std::to_string(n) + " amplitudes");
        }
        CVector amps(n);
        for (int k = 0; k < n; ++k) amps(k) = parse_complex(lines[k]);
        return StateVector::normalized(amps);
    }
    throw std::invalid_argument("unknown state spec '" + std::string(spec) + "'");
}

}  // namespace qdetect::cli
