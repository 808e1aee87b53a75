#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "qdetect/core_state.hpp"
#include "qdetect/spectral.hpp"

namespace qdetect {

/// Unitary dynamics between measurements: either the rank-one all-to-all
/// propagator or a generic Hamiltonian propagated through its spectrum.
class Evolution {
public:
    explicit Evolution(AllToAllModel model);
    explicit Evolution(Spectrum spectrum);

    int dim() const;
    /// U_τ ψ
    CVector apply(double tau, const CVector& psi) const;
    CMatrix matrix(double tau) const;

    const AllToAllModel* all_to_all() const { return std::get_if<AllToAllModel>(&dynamics_); }

private:
    struct Generic {
        Spectrum spectrum;
        CMatrix vectors;  // eigenvectors as columns
        Eigen::VectorXd energies;
    };
    std::variant<AllToAllModel, Generic> dynamics_;
};

struct ExponentialIntervals {
    double rate;
};
struct SharpIntervals {
    double period;
};
using IntervalLaw = std::variant<ExponentialIntervals, SharpIntervals>;

struct ProtocolConfig {
    Evolution evolution;
    SiteWindow window;
    StateVector initial_state;
    IntervalLaw intervals;
    std::uint64_t max_measurements = 1'000'000;
    std::uint64_t n_trajectories = 100'000;
    std::uint64_t master_seed = 0;
    /// When set, a trajectory whose bright weight drops below
    /// `trapped_weight` stops and is recorded as trapped.
    std::optional<Projector> bright_projector;
    double trapped_weight = 1e-24;
    /// Histogram range; derived from the sample when unset.
    std::optional<double> t_max;
    int n_bins = 400;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate() const;
};

enum class Outcome { detected, censored, trapped };

struct TrajectoryRecord {
    Outcome outcome = Outcome::censored;
    /// Σ τ_i up to detection, or up to the last measurement otherwise.
    double time = 0.0;
    std::uint64_t n_measurements = 0;

    bool detected() const { return outcome == Outcome::detected; }
};

struct MeasurementStep {
    bool detected;
    double failure_probability;
    /// Post-measurement state on failure; U_τψ projected and renormalized.
    std::optional<StateVector> state;
};

/// One evolution + projective measurement. Detection happens iff
/// uniform_draw ≥ ‖P_{A⊥} U_τ ψ‖².
MeasurementStep measurement_step(const StateVector& psi, double tau, const Evolution& evolution,
                                 const SiteWindow& window, double uniform_draw);

TrajectoryRecord run_trajectory(const ProtocolConfig& cfg, std::uint64_t stream);

struct Histogram {
    std::vector<double> edges;  // n_bins + 1 values
    std::vector<double> values;
    std::vector<double> stderrs;
};

struct DetectionEnsemble {
    std::vector<TrajectoryRecord> records;
    std::uint64_t n_detected = 0;
    std::uint64_t n_censored = 0;
    std::uint64_t n_trapped = 0;
    double detected_fraction = 0.0;
    double detected_fraction_stderr = 0.0;
    /// Sample mean of the detection times of detected records only.
    double mean_fdt = std::numeric_limits<double>::quiet_NaN();
    double mean_fdt_stderr = std::numeric_limits<double>::quiet_NaN();
    /// S(t) on the bin edges (Kaplan–Meier with Greenwood errors); S(0) = 1.
    Histogram survival;
    /// F(t) per bin: detections / (n·width).
    Histogram detection_density;
};

/// Threads used when none is requested: QDETECT_THREADS if set, otherwise
/// the hardware concurrency.
unsigned default_thread_count();

/// Runs n_trajectories independent trajectories. Trajectory i draws from
/// Philox stream (master_seed, i), and aggregation is done in index order,
/// so the result does not depend on `threads`.
DetectionEnsemble monte_carlo(const ProtocolConfig& cfg, unsigned threads = 0);

/// Builds the ensemble statistics from a list of records.
DetectionEnsemble summarize(std::vector<TrajectoryRecord> records, double t_max, int n_bins);

/// ‖P_{A⊥}U_{τ_n} ⋯ P_{A⊥}U_{τ_1} ψ₀‖²
double conditional_survival(const StateVector& psi0, std::span<const double> taus, const Evolution& evolution,
                            const SiteWindow& window);

struct LaplaceEstimate {
    double value;
    double error;
    /// Survival mass beyond t_max contributes S(t_max)·e^{−s t_max}/s.
    double tail;
    bool reliable;
};

/// ∫₀^∞ e^{−st} S(t) dt from the survival histogram, with the tail beyond
/// t_max extrapolated as a plateau.
LaplaceEstimate numeric_laplace_of_survival(const DetectionEnsemble& ens, double s);

}  // namespace qdetect
