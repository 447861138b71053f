#pragma once

#include <string>
#include <vector>

namespace plmforge::eval::svg {

// Static score-vs-measurement scatter.
void write_scatter(const std::string& path, const std::vector<double>& xs,
                   const std::vector<double>& ys, const std::string& x_label,
                   const std::string& y_label, const std::string& title);

// Histogram with equal-width bins over [min, max].
void write_histogram(const std::string& path, const std::vector<double>& values,
                     std::size_t bins, const std::string& x_label, const std::string& title);

} // namespace plmforge::eval::svg
