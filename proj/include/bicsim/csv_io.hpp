#pragma once

#include <span>
#include <string>
#include <vector>

#include "bicsim/sim_engine.hpp"

namespace bicsim {

/// Writes records as CSV: header row, then one row per record with columns
/// t, per-generator blocks (omega, delta, Eq_prime, P, Q, Tm, Ef, sigma_T,
/// sigma_E), then per-bus |V|. Values at full precision so a parse recovers
/// them exactly.
void export_csv(std::span<const TrajectoryRecord> records, const std::string& path);

/// Reads a file written by export_csv.
std::vector<TrajectoryRecord> import_csv(const std::string& path);

} // namespace bicsim
