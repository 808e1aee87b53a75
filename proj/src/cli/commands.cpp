#include "qdetect/cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <ostream>
#include <stdexcept>

#include "qdetect/analytic.hpp"
#include "qdetect/csv.hpp"
#include "qdetect/philox.hpp"
#include "qdetect/protocol.hpp"

namespace qdetect::cli {

namespace {

struct Setup {
    SiteWindow window;
    std::optional<AllToAllModel> model;
    Evolution evolution;
    DarkBrightDecomposition dec;
    StateVector psi0;
};

Setup make_setup(const RunConfig& cfg)
{
    cfg.validate();
    if (cfg.hamiltonian) {
        const CMatrix h = read_matrix(*cfg.hamiltonian);
        const int n = static_cast<int>(h.rows());
        if (cfg.cut >= n) throw std::invalid_argument("m must be below the matrix dimension");
        const SiteWindow window(n, cfg.cut);
        Spectrum spectrum = generic_eigenbasis(h);
        DarkBrightDecomposition dec = decompose(spectrum, window_projectors(window).target);
        StateVector psi0 = make_state(cfg.state, window, dec);
        return {window, std::nullopt, Evolution(std::move(spectrum)), std::move(dec), std::move(psi0)};
    }
    const SiteWindow window(cfg.n_sites, cfg.cut);
    const AllToAllModel model(cfg.n_sites, cfg.coupling);
    DarkBrightDecomposition dec = bright_basis_all_to_all(window);
    StateVector psi0 = make_state(cfg.state, window, dec);
    return {window, model, Evolution(model), std::move(dec), std::move(psi0)};
}

const AllToAllModel& require_model(const Setup& s)
{
    if (!s.model) throw std::invalid_argument("closed forms are available only for the all-to-all model");
    return *s.model;
}

ProtocolConfig protocol_config(const RunConfig& cfg, const Setup& s, double rate)
{
    IntervalLaw law = ExponentialIntervals{rate};
    if (cfg.protocol == "sharp") law = SharpIntervals{cfg.period};
    ProtocolConfig pc{s.evolution, s.window, s.psi0, law, {}, {}, {}, std::nullopt, 1e-24, std::nullopt};
    pc.max_measurements = cfg.max_measurements;
    pc.n_trajectories = cfg.trajectories;
    pc.master_seed = cfg.seed;
    pc.bright_projector = s.dec.bright;
    pc.t_max = cfg.t_max;
    if (!pc.t_max && s.model && cfg.protocol == "exp") pc.t_max = 12.0 * decay_timescale(rate, *s.model, s.window);
    pc.n_bins = cfg.bins;
    return pc;
}

std::filesystem::path output_dir(const RunConfig& cfg)
{
    std::filesystem::create_directories(cfg.out);
    return cfg.out;
}

void warn_censoring(const DetectionEnsemble& ens, std::ostream& err)
{
    if (ens.n_censored > 0) {
        err << "warning: " << ens.n_censored << " trajectories reached the measurement cap without detection\n";
    }
}

std::vector<double> rate_grid(const RunConfig& cfg, const Grid& fallback)
{
    return cfg.r_grid.value_or(fallback).values();
}

}  // namespace

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    const Setup s = make_setup(cfg);
    const DetectionEnsemble ens = monte_carlo(protocol_config(cfg, s, cfg.rate));
    const auto dir = output_dir(cfg);

    CsvWriter traj(dir / "trajectories.csv", {"index", "outcome", "time", "n_measurements"});
    for (std::size_t i = 0; i < ens.records.size(); ++i) {
        const auto& r = ens.records[i];
        const char* outcome = r.outcome == Outcome::detected ? "detected"
                              : r.outcome == Outcome::trapped ? "trapped"
                                                              : "censored";
        traj.row({std::uint64_t(i), std::string(outcome), r.time, r.n_measurements});
    }
    CsvWriter surv(dir / "survival.csv", {"t", "S", "stderr"});
    for (std::size_t k = 0; k < ens.survival.edges.size(); ++k) {
        surv.row({ens.survival.edges[k], ens.survival.values[k], ens.survival.stderrs[k]});
    }
    CsvWriter fdp(dir / "fdp.csv", {"t", "F", "stderr"});
    const auto& h = ens.detection_density;
    for (std::size_t k = 0; k < h.values.size(); ++k) {
        fdp.row({0.5 * (h.edges[k] + h.edges[k + 1]), h.values[k], h.stderrs[k]});
    }

    out << "mean first detection time: " << format_double(ens.mean_fdt) << " +/- "
        << format_double(ens.mean_fdt_stderr) << '\n';
    out << "detected fraction: " << format_double(ens.detected_fraction) << " +/- "
        << format_double(ens.detected_fraction_stderr) << '\n';
    out << "trapped: " << ens.n_trapped << ", censored: " << ens.n_censored << '\n';
    warn_censoring(ens, err);
    return 0;
}

int cmd_mfdt_sweep(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    const Setup s = make_setup(cfg);
    const AllToAllModel& model = require_model(s);
    const StateCoefficients c = coefficients(s.psi0, s.window);
    const auto rates = rate_grid(cfg, Grid{0.01, 100.0, 81, true});
    const std::optional<double> r_star = optimal_rate(c, model, s.window);

    std::vector<double> t_analytic;
    for (double r : rates) t_analytic.push_back(mfdt(c, r, model, s.window));
    const auto min_index = std::min_element(t_analytic.begin(), t_analytic.end()) - t_analytic.begin();

    std::vector<std::string> header = {"r", "T_analytic", "r_star", "grid_min"};
    if (cfg.monte_carlo) {
        header.emplace_back("T_mc");
        header.emplace_back("T_mc_stderr");
    }
    CsvWriter csv(output_dir(cfg) / "mfdt_sweep.csv", header);
    const double r_star_value = r_star.value_or(std::numeric_limits<double>::quiet_NaN());
    for (std::size_t k = 0; k < rates.size(); ++k) {
        std::vector<CsvCell> row = {rates[k], t_analytic[k], r_star_value, std::int64_t(k == std::size_t(min_index))};
        if (cfg.monte_carlo) {
            RunConfig exp_cfg = cfg;
            exp_cfg.protocol = "exp";
            const DetectionEnsemble ens = monte_carlo(protocol_config(exp_cfg, s, rates[k]));
            warn_censoring(ens, err);
            row.emplace_back(ens.mean_fdt);
            row.emplace_back(ens.mean_fdt_stderr);
        }
        csv.row(row);
    }
    if (r_star) {
        out << "r* = " << format_double(*r_star) << ", T(r*) = " << format_double(mfdt(c, *r_star, model, s.window))
            << '\n';
    } else {
        out << "r* does not exist (c_perp = 0): T(r) decreases monotonically\n";
    }
    out << "grid minimum at r = " << format_double(rates[min_index]) << '\n';
    return 0;
}

int cmd_fdp(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    const Setup s = make_setup(cfg);
    const AllToAllModel& model = require_model(s);
    const StateCoefficients c = coefficients(s.psi0, s.window);
    const std::vector<double> rates = cfg.r_list.empty() ? std::vector<double>{cfg.rate} : cfg.r_list;
    const auto times = cfg.t_grid.value_or(Grid{0.0, 10.0, 201, false}).values();
    const auto dir = output_dir(cfg);

    std::vector<FirstDetectionCurve> curves;
    for (double r : rates) {
        curves.push_back(first_detection_density(c, r, model, s.window, times));
        for (const auto& w : curves.back().warnings) err << "warning (r = " << format_double(r) << "): " << w << '\n';
    }
    std::vector<std::string> header = {"t"};
    for (double r : rates) header.push_back("F_r" + format_double(r));
    CsvWriter csv(dir / "fdp.csv", header);
    for (std::size_t k = 0; k < times.size(); ++k) {
        std::vector<CsvCell> row = {times[k]};
        for (const auto& curve : curves) row.emplace_back(curve.values[k]);
        csv.row(row);
    }
    CsvWriter decay(dir / "decay.csv", {"r", "s1", "t_m"});
    for (std::size_t i = 0; i < rates.size(); ++i) {
        decay.row({rates[i], curves[i].poles[1].real(), curves[i].decay_timescale});
        out << "r = " << format_double(rates[i]) << ": t_m = " << format_double(curves[i].decay_timescale) << '\n';
    }
    if (cfg.monte_carlo) {
        CsvWriter mc(dir / "fdp_mc.csv", {"r", "t", "F", "stderr"});
        for (double r : rates) {
            RunConfig exp_cfg = cfg;
            exp_cfg.protocol = "exp";
            if (!exp_cfg.t_max) exp_cfg.t_max = times.back() > 0.0 ? times.back() : 10.0;
            const DetectionEnsemble ens = monte_carlo(protocol_config(exp_cfg, s, r));
            warn_censoring(ens, err);
            const auto& h = ens.detection_density;
            for (std::size_t k = 0; k < h.values.size(); ++k) {
                mc.row({r, 0.5 * (h.edges[k] + h.edges[k + 1]), h.values[k], h.stderrs[k]});
            }
        }
    }
    return 0;
}

int cmd_darkstates(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/)
{
    cfg.validate();
    CMatrix h;
    if (cfg.hamiltonian) {
        h = read_matrix(*cfg.hamiltonian);
    } else {
        h = AllToAllModel(cfg.n_sites, cfg.coupling).hamiltonian();
    }
    const int n = static_cast<int>(h.rows());
    if (cfg.cut >= n) throw std::invalid_argument("m must be below the matrix dimension");
    const SiteWindow window(n, cfg.cut);
    const DarkBrightDecomposition dec = decompose(generic_eigenbasis(h), window_projectors(window).target);
    const StateVector psi0 = make_state(cfg.state, window, dec);

    out << "N = " << n << ", m = " << window.cut() << '\n';
    out << "dark dimension: " << dec.dark_basis.size() << '\n';
    out << "bright dimension: " << dec.bright_basis.size() << '\n';
    out << "eventual detection probability: " << format_double(eventual_detection_probability(psi0, dec)) << '\n';

    CsvWriter csv(output_dir(cfg) / "dark_basis.csv", {"vector", "site", "re", "im"});
    for (std::size_t v = 0; v < dec.dark_basis.size(); ++v) {
        for (int x = 1; x <= n; ++x) {
            const Complex a = dec.dark_basis[v](x);
            csv.row({std::uint64_t(v), std::int64_t(x), a.real(), a.imag()});
        }
    }
    return 0;
}

int cmd_roots(const RunConfig& cfg, std::ostream& out, std::ostream& /*err*/)
{
    cfg.validate();
    if (cfg.hamiltonian) throw std::invalid_argument("roots are available only for the all-to-all model");
    const SiteWindow window(cfg.n_sites, cfg.cut);
    const AllToAllModel model(cfg.n_sites, cfg.coupling);
    const auto rates = rate_grid(cfg, Grid{0.01, 100.0, 81, true});
    CsvWriter csv(output_dir(cfg) / "roots.csv",
                  {"r", "s1", "s_real", "s_imag", "p", "q", "discriminant", "t_m", "max_rel_residual"});
    double worst = 0.0;
    for (double r : rates) {
        const CubicRoots roots = cubic_roots(r, model, window);
        double residual = 0.0;
        for (Complex s : {Complex(roots.s1), roots.s2()}) {
            const auto& a = roots.q_coefficients;
            const double scale = std::pow(std::abs(s), 3) + a[2] * std::norm(s) + a[1] * std::abs(s) + a[0];
            residual = std::max(residual, std::abs(evaluate_cubic(roots, s)) / scale);
        }
        worst = std::max(worst, residual);
        csv.row({r, roots.s1, roots.s_real, roots.s_imag, roots.p, roots.q, roots.discriminant,
                 1.0 / std::abs(roots.s1), residual});
    }
    out << rates.size() << " rates, max relative residual " << format_double(worst) << '\n';
    return 0;
}

namespace {

class Report {
public:
    Report(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

    void check(const std::string& name, bool ok, const std::string& detail)
    {
        (ok ? out_ : err_) << (ok ? "PASS " : "FAIL ") << name << ": " << detail << '\n';
        if (!ok) ++failures_;
    }
    int failures() const { return failures_; }

private:
    std::ostream& out_;
    std::ostream& err_;
    int failures_ = 0;
};

StateVector phase_probe(const SiteWindow& window)
{
    // (ψ* + i|N⟩)/√2 has |a3| large enough that a sign error in a3 moves T(1)
    // by many standard errors.
    CVector amps = special_state(window).amplitudes();
    amps(window.n_sites() - 1) = Complex(0.0, 1.0);
    return StateVector::unnormalized(amps).normalize();
}

StateVector random_state(int n, PhiloxStream& rng)
{
    CVector amps(n);
    for (int k = 0; k < n; ++k) {
        const double re = rng.normal();
        const double im = rng.normal();
        amps(k) = Complex(re, im);
    }
    return StateVector::unnormalized(amps).normalize();
}

}  // namespace

int cmd_validate(const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    cfg.validate();
    if (cfg.hamiltonian) throw std::invalid_argument("validate runs on the all-to-all model");
    const double scale = cfg.tolerance_scale;
    const SiteWindow window(cfg.n_sites, cfg.cut);
    const AllToAllModel model(cfg.n_sites, cfg.coupling);
    const DarkBrightDecomposition dec = bright_basis_all_to_all(window);
    Report report(out, err);
    const double r = cfg.rate;

    struct Named {
        std::string name;
        StateVector psi;
    };
    const std::vector<Named> states = {{"special", special_state(window)},
                                       {"random-bright(1)", make_state("random-bright(1)", window, dec)},
                                       {"phase-probe", phase_probe(window)}};

    for (const auto& [name, psi] : states) {
        StateCoefficients c = coefficients(psi, window);
        if (cfg.inject_a3_sign_flip) c.a3 = -c.a3;
        const double t = mfdt(c, r, model, window);

        const double f0 = first_detection_laplace(c, r, 0.0, model, window);
        report.check("laplace_normalization[" + name + "]", std::abs(f0 - 1.0) <= 1e-10 * scale,
                     "F^(0) = " + format_double(f0));

        const std::vector<double> no_grid;
        const FirstDetectionCurve curve = first_detection_density(c, r, model, window, no_grid);
        const double total = curve.total_probability();
        report.check("density_normalization[" + name + "]", std::abs(total - 1.0) <= 1e-6 * scale,
                     "integral F = " + format_double(total));
        const double mean = curve.mean_time();
        report.check("density_mean[" + name + "]", std::abs(mean - t) <= 1e-5 * scale * t,
                     "integral tF = " + format_double(mean) + ", T = " + format_double(t));
        const double lap_res = curve.laplace(1.0);
        const double lap_cf = first_detection_laplace(c, r, 1.0, model, window);
        report.check("residue_laplace[" + name + "]", std::abs(lap_res - lap_cf) <= 1e-8 * scale,
                     "residues " + format_double(lap_res) + ", closed form " + format_double(lap_cf));

        RunConfig mc_cfg = cfg;
        mc_cfg.protocol = "exp";
        mc_cfg.trajectories = std::min<std::uint64_t>(cfg.trajectories, 20'000);
        const Setup s{window, model, Evolution(model), dec, psi};
        const DetectionEnsemble ens = monte_carlo(protocol_config(mc_cfg, s, r));
        const double dev = std::abs(ens.mean_fdt - t);
        report.check("mc_vs_analytic_mfdt[" + name + "]", dev <= 3.0 * scale * ens.mean_fdt_stderr,
                     "MC " + format_double(ens.mean_fdt) + " +/- " + format_double(ens.mean_fdt_stderr) +
                         ", analytic " + format_double(t));
    }

    PhiloxStream rng(cfg.seed, 1);
    double worst_root = 0.0;
    bool roots_ok = true;
    for (int k = 0; k < 200; ++k) {
        const int n = 2 + static_cast<int>(rng.uniform() * 49);
        const int m = 1 + static_cast<int>(rng.uniform() * (n - 1));
        const double j = (rng.uniform() < 0.5 ? -1.0 : 1.0) * std::exp(std::log(0.1) + rng.uniform() * std::log(100.0));
        const double rate = std::exp(std::log(1e-3) + rng.uniform() * std::log(1e6));
        try {
            const CubicRoots roots = cubic_roots(rate, AllToAllModel(n, j), SiteWindow(n, m));
            for (Complex s : {Complex(roots.s1), roots.s2(), std::conj(roots.s2())}) {
                const auto& a = roots.q_coefficients;
                const double mag = std::pow(std::abs(s), 3) + a[2] * std::norm(s) + a[1] * std::abs(s) + a[0];
                worst_root = std::max(worst_root, std::abs(evaluate_cubic(roots, s)) / mag);
            }
        } catch (const std::runtime_error&) {
            roots_ok = false;
        }
    }
    report.check("cubic_roots", roots_ok && worst_root <= 1e-9 * scale,
                 "200 draws, Routh-Hurwitz and ordering " + std::string(roots_ok ? "hold" : "violated") +
                     ", max relative residual " + format_double(worst_root));

    double worst_rule = 0.0;
    bool rules_ok = true;
    for (int k = 0; k < 20; ++k) {
        const StateVector psi = random_state(window.n_sites(), rng);
        try {
            const SumRules rules = overlap_sum_rules(psi, window);
            worst_rule = std::max({worst_rule, std::abs(rules.overlap_uniform_direct - rules.overlap_uniform_closed),
                                   std::abs(rules.weighted_zero_modes_direct - rules.weighted_zero_modes_closed)});
        } catch (const std::logic_error&) {
            rules_ok = false;
        }
    }
    report.check("overlap_sum_rules", rules_ok && worst_rule <= 1e-12 * scale,
                 "20 random states, max deviation " + format_double(worst_rule));

    if (window.cut() >= 2) {
        CVector amps = (zero_mode(window.n_sites(), 1).amplitudes() + uniform_state(window.n_sites()).amplitudes()) /
                       std::sqrt(2.0);
        const double p = eventual_detection_probability(StateVector::normalized(amps), dec);
        report.check("dark_half_state", std::abs(p - 0.5) <= 1e-12 * scale,
                     "eventual detection probability " + format_double(p));
    }

    out << (report.failures() == 0 ? "validate: all invariants hold\n" : "validate: failures detected\n");
    return report.failures() == 0 ? 0 : 1;
}

}  // namespace qdetect::cli
