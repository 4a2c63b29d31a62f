#pragma once

#include <cstddef>
#include <vector>

namespace tracksmith {

double mean(const std::vector<double>& xs);
double variance(const std::vector<double>& xs);  // population variance
double stddev(const std::vector<double>& xs);

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either side is constant.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

// Streaming mean/min/max, used by training telemetry.
struct Accumulator {
    std::size_t n = 0;
    double sum = 0.0;
    double min = 0.0;
    double max = 0.0;

    void add(double v);
    double mean() const { return n ? sum / static_cast<double>(n) : 0.0; }
};

}  // namespace tracksmith
