#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "catching/control_sim.hpp"

namespace catching {

struct MetricsOptions {
    double trigger_force = 3.0;      //!< window opens at the first |F| at or above this
    double steady_band = 0.02;       //!< relative band around the object weight
    double steady_time = 0.2;        //!< how long the force must stay in the band [s]
    double peak_window = 5e-3;       //!< strict local maximum over this window [s]
    double contact_lost_force = 0.05;  //!< |F| below this counts as lost contact [N]
    double object_weight_force = -0.5 * 9.81;  //!< F_w, the resting contact force on the robot [N]
};

/// Post-contact evaluation interval [first, last] as sample indices.
struct MetricsWindow {
    std::size_t first = 0;
    std::size_t last = 0;
    bool steady = false;
};

MetricsWindow find_window(const SimTrace& trace, const MetricsOptions& options = {});

/// ∫|F_z − F_w| dt over the window.  Throws NoSteadyState if the force never settles.
double compute_loi(const SimTrace& trace, const MetricsOptions& options = {});

/// First two strict peaks of |F_z| in the window; throws InsufficientPeaks if fewer exist.
std::vector<std::size_t> find_peaks(const SimTrace& trace, const MetricsOptions& options = {});

/// (1 + (2π/δ)²)^(−1/2) with δ = ln(f1/f2); 0 when δ ≤ 0.
double dri_from_ratio(double ratio);
double compute_dri(const SimTrace& trace, const MetricsOptions& options = {});

/// Total time in the window with |F| below the contact-lost threshold [ms].
double compute_bti(const SimTrace& trace, const MetricsOptions& options = {});

/// ∫ Fᵀẋ dt over the window with the robot velocity.
double compute_energy(const SimTrace& trace, const MetricsOptions& options = {});
/// ∫ Fᵀẋ dt over explicit sample indices [first, last].
double compute_energy(const SimTrace& trace, std::size_t first, std::size_t last);

/// max |F_z| over the whole trace.
double compute_fmax(const SimTrace& trace);

struct MetricsReport {
    double loi = 0.0;
    double dri = 0.0;
    double bti = 0.0;
    double energy = 0.0;
    double f_max = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;
    bool steady = false;
    bool dri_from_single_peak = false;
    MetricsOptions options;
};

/// All five metrics; never throws on unsettled or single-peak traces, it flags them instead.
MetricsReport compute_report(const SimTrace& trace, const MetricsOptions& options = {});

void write_report_text(std::ostream& os, const MetricsReport& report);
std::string report_csv_header();
std::string report_csv_row(const MetricsReport& report);

}  // namespace catching
