#include "bicsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "bicsim/errors.hpp"

namespace bicsim {

namespace {

constexpr double kActiveThreshold = 0.01; ///< window-averaged g above this counts as active
constexpr double kSaturationTol = 1e-9;
constexpr double kBoundTol = 1e-9;

double pairwise_sharing_error(const Eigen::VectorXd& weighted, const std::vector<int>& active) {
    if (active.size() < 2) return 0.0;
    double max_diff = 0.0;
    double max_abs = 0.0;
    for (std::size_t a = 0; a < active.size(); ++a) {
        max_abs = std::max(max_abs, std::abs(weighted(active[a])));
        for (std::size_t b = a + 1; b < active.size(); ++b)
            max_diff = std::max(max_diff,
                                std::abs(weighted(active[a]) - weighted(active[b])));
    }
    return max_abs > 0.0 ? max_diff / max_abs : 0.0;
}

void collect_saturation(std::span<const TrajectoryRecord> records, int gen, char input,
                        double limit, bool upper,
                        const std::function<double(const TrajectoryRecord&)>& value,
                        std::vector<SaturationInterval>& out) {
    bool open = false;
    double begin = 0.0, last = 0.0;
    for (const TrajectoryRecord& r : records) {
        const bool at_limit = std::abs(value(r) - limit) <= kSaturationTol;
        if (at_limit && !open) {
            open = true;
            begin = r.time;
        }
        if (!at_limit && open) {
            out.push_back({gen, input, limit, upper, begin, last});
            open = false;
        }
        last = r.time;
    }
    if (open) out.push_back({gen, input, limit, upper, begin, last});
}

} // namespace

MetricsReport compute_metrics(std::span<const TrajectoryRecord> records,
                              const ControllerParams& params, double window_begin,
                              double window_end) {
    if (records.empty()) throw ValidationError("compute_metrics: no records");
    if (!(window_begin < window_end))
        throw ValidationError("compute_metrics: window must have positive width");
    if (window_begin < records.front().time - 1e-12 ||
        window_end > records.back().time + 1e-12)
        throw ValidationError("compute_metrics: window outside recorded time span");

    const int n = static_cast<int>(records.front().omega.size());
    MetricsReport rep;
    rep.window_begin = window_begin;
    rep.window_end = window_end;
    rep.final_frequency_deviation = Eigen::VectorXd::Zero(n);

    Eigen::VectorXd sum_np = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sum_mq = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sum_gt = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sum_ge = Eigen::VectorXd::Zero(n);
    long samples = 0;
    for (const TrajectoryRecord& r : records) {
        if (r.time < window_begin - 1e-12 || r.time > window_end + 1e-12) continue;
        ++samples;
        for (int g = 0; g < n; ++g) {
            rep.final_frequency_deviation(g) = std::max(
                rep.final_frequency_deviation(g), std::abs(r.omega(g) - params.omega_s));
            sum_np(g) += params.n_gains(g) * r.p(g);
            sum_mq(g) += params.m_gains(g) * r.q(g);
            sum_gt(g) += g_value(r.sigma_t(g), params.dt_max(g), params.dt_min(g));
            sum_ge(g) += g_value(r.sigma_e(g), params.de_max(g), params.de_min(g));
        }
    }
    if (samples == 0) throw ValidationError("compute_metrics: window contains no records");

    const Eigen::VectorXd avg_np = sum_np / static_cast<double>(samples);
    const Eigen::VectorXd avg_mq = sum_mq / static_cast<double>(samples);
    for (int g = 0; g < n; ++g) {
        if (sum_gt(g) / static_cast<double>(samples) > kActiveThreshold) rep.active_p.push_back(g);
        if (sum_ge(g) / static_cast<double>(samples) > kActiveThreshold) rep.active_q.push_back(g);
    }
    rep.sharing_error_p = pairwise_sharing_error(avg_np, rep.active_p);
    rep.sharing_error_q = pairwise_sharing_error(avg_mq, rep.active_q);

    for (const TrajectoryRecord& r : records)
        for (int g = 0; g < n; ++g) {
            if (r.sigma_t(g) > params.dt_max(g) + kBoundTol ||
                r.sigma_t(g) < -params.dt_min(g) - kBoundTol)
                ++rep.bound_violations;
            if (r.sigma_e(g) > params.de_max(g) + kBoundTol ||
                r.sigma_e(g) < -params.de_min(g) - kBoundTol)
                ++rep.bound_violations;
        }

    for (int g = 0; g < n; ++g) {
        const double t_hi = params.t_m_nominal(g) + params.dt_max(g);
        const double t_lo = params.t_m_nominal(g) - params.dt_min(g);
        const double e_hi = params.e_f_nominal(g) + params.de_max(g);
        const double e_lo = params.e_f_nominal(g) - params.de_min(g);
        auto tm = [g](const TrajectoryRecord& r) { return r.t_m(g); };
        auto ef = [g](const TrajectoryRecord& r) { return r.e_f(g); };
        collect_saturation(records, g, 'T', t_hi, true, tm, rep.saturated_units);
        collect_saturation(records, g, 'T', t_lo, false, tm, rep.saturated_units);
        collect_saturation(records, g, 'E', e_hi, true, ef, rep.saturated_units);
        collect_saturation(records, g, 'E', e_lo, false, ef, rep.saturated_units);
    }
    return rep;
}

std::string format_report(const MetricsReport& rep) {
    std::ostringstream os;
    os << "window [" << rep.window_begin << ", " << rep.window_end << "] s\n";
    os << "max |omega - omega_s| per generator:";
    for (int g = 0; g < rep.final_frequency_deviation.size(); ++g)
        os << " " << rep.final_frequency_deviation(g);
    os << "\n";
    auto list = [&os](const std::vector<int>& v) {
        for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i] + 1;
    };
    os << "real power sharing error:     " << rep.sharing_error_p << " (active units ";
    list(rep.active_p);
    os << ")\n";
    os << "reactive power sharing error: " << rep.sharing_error_q << " (active units ";
    list(rep.active_q);
    os << ")\n";
    os << "bound violations: " << rep.bound_violations << "\n";
    if (rep.saturated_units.empty()) {
        os << "saturated units: none\n";
    } else {
        os << "saturated units:\n";
        for (const SaturationInterval& s : rep.saturated_units)
            os << "  generator " << s.generator + 1 << " " << (s.input == 'T' ? "Tm" : "Ef")
               << " at " << (s.upper ? "upper" : "lower") << " limit " << s.limit << " during ["
               << s.t_begin << ", " << s.t_end << "] s\n";
    }
    return os.str();
}

} // namespace bicsim
