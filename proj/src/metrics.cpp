#include "catching/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "catching/errors.hpp"

namespace catching {

namespace {
double abs_fz(const TraceRow& r) { return std::abs(r.force.z()); }
}  // namespace

MetricsWindow find_window(const SimTrace& trace, const MetricsOptions& o) {
    MetricsWindow w;
    if (trace.empty()) return w;
    const std::size_t n = trace.size();
    w.first = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (trace[i].force.norm() >= o.trigger_force) {
            w.first = i;
            break;
        }
    w.last = n - 1;

    const double band = o.steady_band * std::abs(o.object_weight_force);
    // earliest index from which the force stays in the band for steady_time
    std::size_t run_start = n;
    for (std::size_t i = w.first; i < n; ++i) {
        if (std::abs(trace[i].force.z() - o.object_weight_force) <= band) {
            if (run_start == n) run_start = i;
            if (trace[i].t - trace[run_start].t >= o.steady_time - 1e-12) {
                w.last = run_start;
                w.steady = true;
                return w;
            }
        } else {
            run_start = n;
        }
    }
    return w;
}

double compute_loi(const SimTrace& trace, const MetricsOptions& o) {
    const MetricsWindow w = find_window(trace, o);
    if (!w.steady)
        throw NoSteadyState("force never settled; window would end at t = " +
                            std::to_string(trace.empty() ? 0.0 : trace.back().t));
    double loi = 0.0;
    for (std::size_t i = w.first; i < w.last; ++i) {
        const double a = std::abs(trace[i].force.z() - o.object_weight_force);
        const double b = std::abs(trace[i + 1].force.z() - o.object_weight_force);
        loi += 0.5 * (a + b) * (trace[i + 1].t - trace[i].t);
    }
    return loi;
}

std::vector<std::size_t> find_peaks(const SimTrace& trace, const MetricsOptions& o) {
    const MetricsWindow w = find_window(trace, o);
    std::vector<std::size_t> peaks;
    const double half = 0.5 * o.peak_window;
    for (std::size_t k = w.first; k <= w.last && k < trace.size(); ++k) {
        const double a = abs_fz(trace[k]);
        bool is_peak = a > 0.0;
        for (std::size_t j = k; is_peak && j > w.first && trace[k].t - trace[j - 1].t <= half + 1e-12; --j)
            if (abs_fz(trace[j - 1]) >= a) is_peak = false;
        for (std::size_t j = k + 1; is_peak && j <= w.last && trace[j].t - trace[k].t <= half + 1e-12; ++j)
            if (abs_fz(trace[j]) >= a) is_peak = false;
        if (is_peak) {
            peaks.push_back(k);
            if (peaks.size() == 2) break;
        }
    }
    if (peaks.size() < 2) throw InsufficientPeaks("fewer than two force peaks after contact");
    return peaks;
}

double dri_from_ratio(double ratio) {
    const double delta = std::log(ratio);
    if (!(delta > 0.0)) return 0.0;
    const double q = 2.0 * M_PI / delta;
    return 1.0 / std::sqrt(1.0 + q * q);
}

double compute_dri(const SimTrace& trace, const MetricsOptions& o) {
    const auto peaks = find_peaks(trace, o);
    return dri_from_ratio(abs_fz(trace[peaks[0]]) / abs_fz(trace[peaks[1]]));
}

double compute_bti(const SimTrace& trace, const MetricsOptions& o) {
    const MetricsWindow w = find_window(trace, o);
    double lost = 0.0;
    for (std::size_t i = w.first; i < w.last; ++i)
        if (trace[i].force.norm() < o.contact_lost_force) lost += trace[i + 1].t - trace[i].t;
    return 1e3 * lost;
}

double compute_energy(const SimTrace& trace, std::size_t first, std::size_t last) {
    double e = 0.0;
    for (std::size_t i = first; i < last && i + 1 < trace.size(); ++i) {
        const double a = trace[i].force.dot(trace[i].velocity);
        const double b = trace[i + 1].force.dot(trace[i + 1].velocity);
        e += 0.5 * (a + b) * (trace[i + 1].t - trace[i].t);
    }
    return e;
}

double compute_energy(const SimTrace& trace, const MetricsOptions& o) {
    const MetricsWindow w = find_window(trace, o);
    return compute_energy(trace, w.first, w.last);
}

double compute_fmax(const SimTrace& trace) {
    double f = 0.0;
    for (const auto& r : trace) f = std::max(f, abs_fz(r));
    return f;
}

MetricsReport compute_report(const SimTrace& trace, const MetricsOptions& o) {
    MetricsReport rep;
    rep.options = o;
    const MetricsWindow w = find_window(trace, o);
    rep.steady = w.steady;
    if (!trace.empty()) {
        rep.t_start = trace[w.first].t;
        rep.t_end = trace[w.last].t;
    }
    double loi = 0.0;
    for (std::size_t i = w.first; i < w.last; ++i) {
        const double a = std::abs(trace[i].force.z() - o.object_weight_force);
        const double b = std::abs(trace[i + 1].force.z() - o.object_weight_force);
        loi += 0.5 * (a + b) * (trace[i + 1].t - trace[i].t);
    }
    rep.loi = loi;
    try {
        rep.dri = compute_dri(trace, o);
    } catch (const InsufficientPeaks&) {
        rep.dri = 1.0;
        rep.dri_from_single_peak = true;
    }
    rep.bti = compute_bti(trace, o);
    rep.energy = compute_energy(trace, w.first, w.last);
    rep.f_max = compute_fmax(trace);
    return rep;
}

void write_report_text(std::ostream& os, const MetricsReport& r) {
    char buf[128];
    auto kv = [&](const char* key, double v) {
        std::snprintf(buf, sizeof(buf), "%s=%.9g\n", key, v);
        os << buf;
    };
    kv("loi", r.loi);
    kv("dri", r.dri);
    kv("bti_ms", r.bti);
    kv("energy", r.energy);
    kv("f_max", r.f_max);
    kv("window_start", r.t_start);
    kv("window_end", r.t_end);
    os << "steady=" << (r.steady ? "true" : "false") << "\n";
    os << "dri_single_peak=" << (r.dri_from_single_peak ? "true" : "false") << "\n";
    kv("peak_window", r.options.peak_window);
    kv("contact_lost_force", r.options.contact_lost_force);
    kv("trigger_force", r.options.trigger_force);
}

std::string report_csv_header() { return "loi,dri,bti,energy,f_max"; }

std::string report_csv_row(const MetricsReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g,%.9g", r.loi, r.dri, r.bti, r.energy, r.f_max);
    return buf;
}

}  // namespace catching
