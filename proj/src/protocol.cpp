#include "qdetect/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <stdexcept>
#include <thread>

#include "qdetect/philox.hpp"

namespace qdetect {

Evolution::Evolution(AllToAllModel model) : dynamics_(model) {}

namespace {

Spectrum checked_spectrum(Spectrum spectrum)
{
    const int n = spectrum.dim();
    if (n == 0 || static_cast<int>(spectrum.vectors.size()) != n) {
        throw std::invalid_argument("evolution needs a complete spectrum");
    }
    return spectrum;
}

}  // namespace

Evolution::Evolution(Spectrum spectrum) : dynamics_(Generic{checked_spectrum(std::move(spectrum)), {}, {}})
{
    auto& g = std::get<Generic>(dynamics_);
    const int n = g.spectrum.dim();
    g.vectors.resize(n, n);
    g.energies.resize(n);
    for (int i = 0; i < n; ++i) {
        g.vectors.col(i) = g.spectrum.vectors[i].amplitudes();
        g.energies(i) = g.spectrum.energies[i];
    }
}

int Evolution::dim() const
{
    if (const auto* m = std::get_if<AllToAllModel>(&dynamics_)) return m->n_sites();
    return std::get<Generic>(dynamics_).spectrum.dim();
}

CVector Evolution::apply(double tau, const CVector& psi) const
{
    if (const auto* m = std::get_if<AllToAllModel>(&dynamics_)) {
        return propagate(tau, *m, psi);
    }
    const auto& g = std::get<Generic>(dynamics_);
    CVector coeffs = g.vectors.adjoint() * psi;
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        coeffs(i) *= std::polar(1.0, -g.energies(i) * tau);
    }
    return g.vectors * coeffs;
}

CMatrix Evolution::matrix(double tau) const
{
    if (const auto* m = std::get_if<AllToAllModel>(&dynamics_)) return propagator(tau, *m);
    return spectral_propagator(std::get<Generic>(dynamics_).spectrum, tau);
}

void ProtocolConfig::validate() const
{
    if (evolution.dim() != window.n_sites() || initial_state.dim() != window.n_sites()) {
        throw std::invalid_argument("protocol: model, window and initial state dimensions differ");
    }
    if (!initial_state.is_normalized()) {
        throw std::invalid_argument("protocol: initial state must be normalized");
    }
    std::visit(
        [](const auto& law) {
            using T = std::decay_t<decltype(law)>;
            if constexpr (std::is_same_v<T, ExponentialIntervals>) {
                if (!(law.rate > 0.0) || !std::isfinite(law.rate)) {
                    throw std::invalid_argument("protocol: measurement rate must be positive");
                }
            } else {
                if (!(law.period > 0.0) || !std::isfinite(law.period)) {
                    throw std::invalid_argument("protocol: measurement period must be positive");
                }
            }
        },
        intervals);
    if (max_measurements == 0 || n_trajectories == 0) {
        throw std::invalid_argument("protocol: measurement cap and trajectory count must be positive");
    }
    if (n_bins < 1) throw std::invalid_argument("protocol: histogram needs at least one bin");
    if (t_max && !(*t_max > 0.0)) throw std::invalid_argument("protocol: t_max must be positive");
    if (bright_projector && bright_projector->dim() != window.n_sites()) {
        throw std::invalid_argument("protocol: bright projector has the wrong dimension");
    }
}

namespace {

struct StepOutcome {
    bool detected;
    double failure_probability;
};

// Evolves psi in place; on failure psi holds the renormalized collapsed state.
StepOutcome step_in_place(CVector& psi, double tau, const Evolution& evolution, int cut, double draw)
{
    psi = evolution.apply(tau, psi);
    const double p_fail = psi.head(cut).squaredNorm();
    if (!(p_fail >= 0.0) || p_fail > 1.0 + 1e-12) {
        throw std::runtime_error("measurement step: failure probability outside [0, 1] (numerical corruption)");
    }
    if (draw >= p_fail) {
        return {true, p_fail};
    }
    psi.tail(psi.size() - cut).setZero();
    psi /= std::sqrt(p_fail);
    return {false, p_fail};
}

double draw_interval(const IntervalLaw& law, PhiloxStream& rng)
{
    if (const auto* e = std::get_if<ExponentialIntervals>(&law)) return rng.exponential(e->rate);
    return std::get<SharpIntervals>(law).period;
}

}  // namespace

MeasurementStep measurement_step(const StateVector& psi, double tau, const Evolution& evolution,
                                 const SiteWindow& window, double uniform_draw)
{
    if (psi.dim() != window.n_sites() || evolution.dim() != window.n_sites()) {
        throw std::invalid_argument("measurement step: dimension mismatch");
    }
    if (tau < 0.0) throw std::invalid_argument("measurement step: negative interval");
    CVector amps = psi.amplitudes();
    const StepOutcome out = step_in_place(amps, tau, evolution, window.cut(), uniform_draw);
    if (out.detected) return {true, out.failure_probability, std::nullopt};
    return {false, out.failure_probability, StateVector::normalized(std::move(amps))};
}

TrajectoryRecord run_trajectory(const ProtocolConfig& cfg, std::uint64_t stream)
{
    PhiloxStream rng(cfg.master_seed, stream);
    CVector psi = cfg.initial_state.amplitudes();
    const int cut = cfg.window.cut();
    const CMatrix* bright = cfg.bright_projector ? &cfg.bright_projector->matrix() : nullptr;
    TrajectoryRecord rec;
    for (std::uint64_t n = 1; n <= cfg.max_measurements; ++n) {
        const double tau = draw_interval(cfg.intervals, rng);
        rec.time += tau;
        rec.n_measurements = n;
        if (step_in_place(psi, tau, cfg.evolution, cut, rng.uniform()).detected) {
            rec.outcome = Outcome::detected;
            return rec;
        }
        if (bright && ((*bright) * psi).squaredNorm() < cfg.trapped_weight) {
            rec.outcome = Outcome::trapped;
            return rec;
        }
    }
    rec.outcome = Outcome::censored;
    return rec;
}

unsigned default_thread_count()
{
    if (const char* env = std::getenv("QDETECT_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

double sample_t_max(const std::vector<TrajectoryRecord>& records)
{
    std::vector<double> times;
    for (const auto& r : records) {
        if (r.detected()) times.push_back(r.time);
    }
    if (times.empty()) {
        double longest = 0.0;
        for (const auto& r : records) longest = std::max(longest, r.time);
        return longest > 0.0 ? longest : 1.0;
    }
    const auto k = static_cast<std::size_t>(0.999 * double(times.size() - 1));
    std::nth_element(times.begin(), times.begin() + k, times.end());
    return times[k] > 0.0 ? 1.5 * times[k] : 1.0;
}

}  // namespace

DetectionEnsemble summarize(std::vector<TrajectoryRecord> records, double t_max, int n_bins)
{
    if (!(t_max > 0.0) || n_bins < 1) throw std::invalid_argument("summarize: invalid histogram range");
    DetectionEnsemble ens;
    const double n = static_cast<double>(records.size());
    double sum = 0.0;
    for (const auto& r : records) {
        switch (r.outcome) {
        case Outcome::detected:
            ++ens.n_detected;
            sum += r.time;
            break;
        case Outcome::censored: ++ens.n_censored; break;
        case Outcome::trapped: ++ens.n_trapped; break;
        }
    }
    if (!records.empty()) {
        ens.detected_fraction = double(ens.n_detected) / n;
        ens.detected_fraction_stderr = std::sqrt(ens.detected_fraction * (1.0 - ens.detected_fraction) / n);
    }
    if (ens.n_detected > 0) {
        ens.mean_fdt = sum / double(ens.n_detected);
        double ss = 0.0;
        for (const auto& r : records) {
            if (r.detected()) ss += (r.time - ens.mean_fdt) * (r.time - ens.mean_fdt);
        }
        ens.mean_fdt_stderr =
            ens.n_detected > 1 ? std::sqrt(ss / double(ens.n_detected - 1) / double(ens.n_detected)) : 0.0;
    }

    const double width = t_max / n_bins;
    std::vector<double> edges(n_bins + 1);
    for (int k = 0; k <= n_bins; ++k) edges[k] = k * width;
    edges.back() = t_max;

    // Kaplan–Meier over finite event/censoring times; trapped records never
    // leave the risk set.
    std::vector<std::pair<double, bool>> events;  // (time, is_detection)
    for (const auto& r : records) {
        if (r.outcome != Outcome::trapped) events.emplace_back(r.time, r.detected());
    }
    std::sort(events.begin(), events.end());
    ens.survival.edges = edges;
    ens.survival.values.assign(edges.size(), 1.0);
    ens.survival.stderrs.assign(edges.size(), 0.0);
    double at_risk = n;
    double surv = 1.0;
    double greenwood = 0.0;
    std::size_t e = 0;
    for (std::size_t k = 0; k < edges.size(); ++k) {
        while (e < events.size() && events[e].first <= edges[k]) {
            const double t = events[e].first;
            double d = 0.0;
            double c = 0.0;
            for (; e < events.size() && events[e].first == t; ++e) (events[e].second ? d : c) += 1.0;
            if (d > 0.0 && at_risk > 0.0) {
                surv *= 1.0 - d / at_risk;
                if (at_risk > d) greenwood += d / (at_risk * (at_risk - d));
            }
            at_risk -= d + c;
        }
        ens.survival.values[k] = surv;
        ens.survival.stderrs[k] = surv * std::sqrt(greenwood);
    }

    ens.detection_density.edges = edges;
    std::vector<double> counts(n_bins, 0.0);
    for (const auto& r : records) {
        if (!r.detected() || r.time >= t_max) continue;
        const auto k = std::min(n_bins - 1, static_cast<int>(r.time / width));
        counts[k] += 1.0;
    }
    ens.detection_density.values.resize(n_bins);
    ens.detection_density.stderrs.resize(n_bins);
    for (int k = 0; k < n_bins; ++k) {
        const double norm = n * (edges[k + 1] - edges[k]);
        ens.detection_density.values[k] = counts[k] / norm;
        ens.detection_density.stderrs[k] = std::sqrt(counts[k]) / norm;
    }
    ens.records = std::move(records);
    return ens;
}

DetectionEnsemble monte_carlo(const ProtocolConfig& cfg, unsigned threads)
{
    cfg.validate();
    if (threads == 0) threads = default_thread_count();
    const std::uint64_t n = cfg.n_trajectories;
    threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n));
    std::vector<TrajectoryRecord> records(n);
    std::vector<std::exception_ptr> errors(threads);
    auto work = [&](unsigned worker) {
        const std::uint64_t begin = n * worker / threads;
        const std::uint64_t end = n * (worker + 1) / threads;
        try {
            for (std::uint64_t i = begin; i < end; ++i) records[i] = run_trajectory(cfg, i);
        } catch (...) {
            errors[worker] = std::current_exception();
        }
    };
    if (threads == 1) {
        work(0);
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    }
    for (const auto& err : errors) {
        if (err) std::rethrow_exception(err);
    }
    const double t_max = cfg.t_max.value_or(sample_t_max(records));
    return summarize(std::move(records), t_max, cfg.n_bins);
}

double conditional_survival(const StateVector& psi0, std::span<const double> taus, const Evolution& evolution,
                            const SiteWindow& window)
{
    if (psi0.dim() != window.n_sites() || evolution.dim() != window.n_sites()) {
        throw std::invalid_argument("conditional survival: dimension mismatch");
    }
    CVector psi = psi0.amplitudes();
    for (double tau : taus) {
        psi = evolution.apply(tau, psi);
        psi.tail(psi.size() - window.cut()).setZero();
    }
    return psi.squaredNorm();
}

LaplaceEstimate numeric_laplace_of_survival(const DetectionEnsemble& ens, double s)
{
    if (!(s > 0.0)) throw std::invalid_argument("Laplace estimate needs s > 0");
    const auto& t = ens.survival.edges;
    const auto& S = ens.survival.values;
    const auto& err = ens.survival.stderrs;
    if (t.size() < 3) throw std::invalid_argument("Laplace estimate needs at least two bins");

    auto trapezoid = [&](std::size_t stride) {
        double acc = 0.0;
        for (std::size_t k = 0; k + stride < t.size(); k += stride) {
            const double f0 = std::exp(-s * t[k]) * S[k];
            const double f1 = std::exp(-s * t[k + stride]) * S[k + stride];
            acc += 0.5 * (t[k + stride] - t[k]) * (f0 + f1);
        }
        return acc;
    };
    const double fine = trapezoid(1);
    double discretization = 0.0;
    if ((t.size() - 1) % 2 == 0) discretization = std::abs(fine - trapezoid(2)) / 3.0;

    double statistical = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) {
        statistical += 0.5 * (t[k + 1] - t[k]) * (std::exp(-s * t[k]) * err[k] + std::exp(-s * t[k + 1]) * err[k + 1]);
    }

    const double t_max = t.back();
    const double decay = std::exp(-s * t_max) / s;
    const double tail = S.back() * decay;
    const double n = static_cast<double>(ens.records.size());
    const double trapped = n > 0.0 ? double(ens.n_trapped) / n : 0.0;
    const double uncertain_tail = std::max(0.0, S.back() - trapped) * decay;

    LaplaceEstimate out;
    out.value = fine + tail;
    out.tail = tail;
    out.error = discretization + statistical + uncertain_tail;
    out.reliable = uncertain_tail <= 1e-3 * out.value;
    return out;
}

}  // namespace qdetect
