#pragma once

#include <string>

#include "adlti/timeseries.hpp"

namespace adlti {

enum class GapPolicy { error, interpolate };

// Header row; column 1 = ISO-8601 timestamp; columns 2..m+1 = channels.
TimeSeries load_series_csv(const std::string& path,
                           GapPolicy gaps = GapPolicy::error);
void write_series_csv(const std::string& path, const TimeSeries& series);

// Header row; columns: timestamp, label in {0,1}.
LabelTrack load_labels_csv(const std::string& path);
void write_labels_csv(const std::string& path, const LabelTrack& labels);

// Shortest representation that round-trips a double exactly.
std::string format_double(double v);

}  // namespace adlti
