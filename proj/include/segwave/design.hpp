#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace segwave {

// One piecewise-constant coupler section: the two waveguide widths and the
// propagation length of the section.
struct Segment {
  double width0_nm = 0.0;
  double width1_nm = 0.0;
  double length_um = 0.0;
};

// An ordered list of segments (index 0 is traversed first) plus the global
// geometry shared by all segments. The gap is center-to-center.
struct Design {
  std::vector<Segment> segments;
  double gap_um = 1.0;
  double height_nm = 220.0;
  double etch_nm = 150.0;
  double wavelength_um = 1.55;

  int size() const { return static_cast<int>(segments.size()); }

  double total_length_um() const {
    double L = 0.0;
    for (const auto& s : segments) L += s.length_um;
    return L;
  }

  // W_mean = (1/2N) sum_i (W_i^(0) + W_i^(1))
  double mean_width_nm() const {
    if (segments.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : segments) sum += s.width0_nm + s.width1_nm;
    return sum / (2.0 * static_cast<double>(segments.size()));
  }

  void validate() const {
    if (segments.empty()) {
      throw std::invalid_argument("design: needs at least one segment");
    }
    for (std::size_t i = 0; i < segments.size(); ++i) {
      const auto& s = segments[i];
      if (!(s.width0_nm > 0.0) || !(s.width1_nm > 0.0)) {
        throw std::invalid_argument("design: segment " + std::to_string(i) +
                                    " has non-positive width");
      }
      if (!(s.length_um > 0.0)) {
        throw std::invalid_argument("design: segment " + std::to_string(i) +
                                    " has non-positive length");
      }
    }
  }
};

}  // namespace segwave
