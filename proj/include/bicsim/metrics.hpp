#pragma once

#include <span>
#include <string>
#include <vector>

#include "bicsim/controller.hpp"
#include "bicsim/sim_engine.hpp"

namespace bicsim {

/// Interval during which a generator input sits at one of its limits.
struct SaturationInterval {
    int generator = 0;    ///< 0-based
    char input = 'T';     ///< 'T' mechanical torque, 'E' field voltage
    double limit = 0.0;
    bool upper = true;
    double t_begin = 0.0;
    double t_end = 0.0;
};

/// Window-averaged health report of a run.
struct MetricsReport {
    double window_begin = 0.0;
    double window_end = 0.0;
    Eigen::VectorXd final_frequency_deviation; ///< max |omega - omega_s| per generator
    double sharing_error_p = 0.0; ///< over units active on the torque side
    double sharing_error_q = 0.0; ///< over units active on the field side
    std::vector<int> active_p;    ///< units with window-averaged g_T > 0.01
    std::vector<int> active_q;    ///< units with window-averaged g_E > 0.01
    long bound_violations = 0;    ///< records with sigma outside its closed interval
    std::vector<SaturationInterval> saturated_units;
};

/// Averages over [window_begin, window_end] and excludes saturated units
/// (window-averaged g below 0.01) from the sharing errors.
MetricsReport compute_metrics(std::span<const TrajectoryRecord> records,
                              const ControllerParams& params, double window_begin,
                              double window_end);

std::string format_report(const MetricsReport& report);

} // namespace bicsim
