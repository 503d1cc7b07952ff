#pragma once

#include <string>
#include <vector>

#include "amlab/metrics.hpp"
#include "amlab/sweep.hpp"

namespace amlab {

/// Column order is a contract:
/// knob_name,knob_value,defender_acc,clone_acc,attack,strategy,seed
void write_tradeoff_csv(const std::vector<TradeoffPoint>& points, const std::string& path);
std::vector<TradeoffPoint> read_tradeoff_csv(const std::string& path);

/// value,cum_fraction,label
void write_cdf_csv(const std::vector<CdfSeries>& series, const std::string& path);

/// Static line chart, fixed 640x480 viewbox, byte-deterministic for
/// identical inputs.
void write_tradeoff_svg(const std::vector<TradeoffPoint>& points, const std::string& path);
void write_cdf_svg(const std::vector<CdfSeries>& series, const std::string& path);

/// Deterministic decimal formatting used by every report writer.
std::string format_double(double v);

}  // namespace amlab
