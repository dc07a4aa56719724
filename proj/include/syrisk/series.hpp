#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "syrisk/error.hpp"
#include "syrisk/scoring.hpp"

namespace syrisk {

/// Paired losses (x_t, y_t); dates are optional and kept as given.
struct LossSeries {
  std::vector<std::string> dates;
  std::vector<double> x;
  std::vector<double> y;

  std::size_t size() const { return x.size(); }
  Obs operator[](std::size_t t) const { return {x[t], y[t]}; }
  void validate() const {
    if (x.size() != y.size()) throw DataError("loss series: x and y lengths differ");
    if (!dates.empty() && dates.size() != x.size())
      throw DataError("loss series: date column length differs");
  }
  LossSeries slice(std::size_t from, std::size_t to) const {
    LossSeries s;
    if (!dates.empty()) s.dates.assign(dates.begin() + from, dates.begin() + to);
    s.x.assign(x.begin() + from, x.begin() + to);
    s.y.assign(y.begin() + from, y.begin() + to);
    return s;
  }
};

}  // namespace syrisk
