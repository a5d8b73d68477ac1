#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <memory>
#include <numbers>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "segwave/cmt.hpp"

namespace segwave {

// Partial derivatives of the coefficients with respect to the two widths.
// n_eff of each waveguide depends only on that waveguide's width.
struct CoefficientGradients {
  SegmentCoefficients value;
  double dkappa_dw0 = 0.0;
  double dkappa_dw1 = 0.0;
  double ddelta_dw0 = 0.0;
  double ddelta_dw1 = 0.0;
  double dneff0_dw0 = 0.0;
  double dneff1_dw1 = 0.0;
};

// Width pair (nm) -> physical coefficients. Implementations are immutable
// after construction; lookups are pure and thread-safe. No extrapolation:
// queries outside the supported width range throw.
class CouplingMap {
 public:
  virtual ~CouplingMap() = default;

  virtual SegmentCoefficients lookup(double w0_nm, double w1_nm) const = 0;
  virtual double min_width_nm() const = 0;
  virtual double max_width_nm() const = 0;

  virtual bool has_analytic_gradient() const { return false; }
  virtual CoefficientGradients lookup_gradients(double /*w0_nm*/,
                                                double /*w1_nm*/) const {
    throw std::logic_error("coupling map has no analytic gradient");
  }

  bool contains(double w_nm) const {
    return w_nm >= min_width_nm() && w_nm <= max_width_nm();
  }

  double clamp_width(double w_nm) const {
    return std::clamp(w_nm, min_width_nm(), max_width_nm());
  }

 protected:
  void check_range(double w0_nm, double w1_nm) const {
    if (!contains(w0_nm) || !contains(w1_nm)) {
      throw std::out_of_range(
          "coupling map: width (" + std::to_string(w0_nm) + ", " +
          std::to_string(w1_nm) + ") nm outside supported range [" +
          std::to_string(min_width_nm()) + ", " +
          std::to_string(max_width_nm()) + "] nm");
    }
  }
};

// Analytic stand-in for a mode-solver lookup table.
//
//   n_eff(W) = n_clad + (n_core - n_clad) (1 - exp(-(W - W_cut)/W_sat))
//   kappa(w0, w1) = kappa0 exp(-gamma (gap - (w0 + w1)/2))
//   delta(w0, w1) = (pi/lambda) (n_eff(w0) - n_eff(w1))
//
// n_eff is strictly increasing in W and stays inside (n_clad, n_core);
// kappa decays with the edge-to-edge separation; delta is antisymmetric
// under swapping the widths.
struct SurrogateParams {
  double n_core = 2.21;   // LiNbO3 near 1.55 um
  double n_clad = 1.444;  // SiO2 cladding
  double w_cut_nm = 70.0;
  double w_sat_nm = 930.0;
  double kappa0_per_um = 0.13;
  double gamma_per_um = 3.0;
  double gap_um = 1.0;
  double wavelength_um = 1.55;
  double w_min_nm = 500.0;
  double w_max_nm = 850.0;

  void validate() const {
    if (!(n_clad > 1.0) || !(n_core > n_clad)) {
      throw std::invalid_argument("surrogate: need 1 < n_clad < n_core");
    }
    if (!(w_sat_nm > 0.0)) {
      throw std::invalid_argument("surrogate: w_sat must be positive");
    }
    if (!(kappa0_per_um > 0.0) || !(gamma_per_um > 0.0)) {
      throw std::invalid_argument("surrogate: kappa0 and gamma must be > 0");
    }
    if (!(w_min_nm < w_max_nm)) {
      throw std::invalid_argument("surrogate: empty width range");
    }
    if (w_min_nm <= w_cut_nm) {
      throw std::invalid_argument(
          "surrogate: width range must lie above the n_eff cutoff");
    }
    if (!(wavelength_um > 0.0) || !(gap_um > 0.0)) {
      throw std::invalid_argument("surrogate: invalid geometry");
    }
  }
};

class SurrogateMap : public CouplingMap {
 public:
  explicit SurrogateMap(const SurrogateParams& params) : p_(params) {
    p_.validate();
  }

  const SurrogateParams& params() const { return p_; }

  double n_eff(double w_nm) const {
    return p_.n_clad + (p_.n_core - p_.n_clad) *
                           (1.0 - std::exp(-(w_nm - p_.w_cut_nm) / p_.w_sat_nm));
  }

  double n_eff_slope(double w_nm) const {
    return (p_.n_core - p_.n_clad) / p_.w_sat_nm *
           std::exp(-(w_nm - p_.w_cut_nm) / p_.w_sat_nm);
  }

  double kappa(double w0_nm, double w1_nm) const {
    const double sep_um = p_.gap_um - 0.5e-3 * (w0_nm + w1_nm);
    return p_.kappa0_per_um * std::exp(-p_.gamma_per_um * sep_um);
  }

  SegmentCoefficients lookup(double w0_nm, double w1_nm) const override {
    check_range(w0_nm, w1_nm);
    SegmentCoefficients c{};
    c.n_eff0 = n_eff(w0_nm);
    c.n_eff1 = n_eff(w1_nm);
    c.kappa_per_um = kappa(w0_nm, w1_nm);
    c.delta_per_um =
        std::numbers::pi / p_.wavelength_um * (c.n_eff0 - c.n_eff1);
    return c;
  }

  bool has_analytic_gradient() const override { return true; }

  CoefficientGradients lookup_gradients(double w0_nm,
                                        double w1_nm) const override {
    CoefficientGradients g{};
    g.value = lookup(w0_nm, w1_nm);
    // d kappa / d w = gamma * kappa * (0.5e-3 um/nm)
    const double dk = p_.gamma_per_um * g.value.kappa_per_um * 0.5e-3;
    g.dkappa_dw0 = dk;
    g.dkappa_dw1 = dk;
    g.dneff0_dw0 = n_eff_slope(w0_nm);
    g.dneff1_dw1 = n_eff_slope(w1_nm);
    const double pref = std::numbers::pi / p_.wavelength_um;
    g.ddelta_dw0 = pref * g.dneff0_dw0;
    g.ddelta_dw1 = -pref * g.dneff1_dw1;
    return g;
  }

  double min_width_nm() const override { return p_.w_min_nm; }
  double max_width_nm() const override { return p_.w_max_nm; }

 private:
  SurrogateParams p_;
};

inline SurrogateParams default_linbo3_params() {
  return SurrogateParams{};  // n_core 2.21
}

inline SurrogateParams default_silicon_params() {
  SurrogateParams p;
  p.n_core = 3.48;
  return p;
}

inline SurrogateMap default_linbo3_map() {
  return SurrogateMap(default_linbo3_params());
}

inline SurrogateMap default_silicon_map() {
  return SurrogateMap(default_silicon_params());
}

// Rectilinear lookup table with strictly increasing, uniformly spaced axes
// and one coefficient record per node (row-major over w0 x w1).
struct CouplingTable {
  std::vector<double> w0_grid_nm;
  std::vector<double> w1_grid_nm;
  std::vector<SegmentCoefficients> nodes;

  const SegmentCoefficients& at(std::size_t i0, std::size_t i1) const {
    return nodes[i0 * w1_grid_nm.size() + i1];
  }
};

namespace detail {

inline void validate_axis(const std::vector<double>& axis, const char* name) {
  if (axis.size() < 2) {
    throw std::invalid_argument(std::string("coupling table: axis ") + name +
                                " needs at least two values");
  }
  const double step = axis[1] - axis[0];
  if (!(step > 0.0)) {
    throw std::invalid_argument(std::string("coupling table: axis ") + name +
                                " is not strictly increasing");
  }
  for (std::size_t i = 1; i < axis.size(); ++i) {
    const double d = axis[i] - axis[i - 1];
    if (!(d > 0.0)) {
      throw std::invalid_argument(std::string("coupling table: axis ") + name +
                                  " is not strictly increasing");
    }
    if (std::abs(d - step) > 1e-6 * step) {
      throw std::invalid_argument(std::string("coupling table: axis ") + name +
                                  " is not uniformly spaced");
    }
  }
}

}  // namespace detail

class TableMap : public CouplingMap {
 public:
  explicit TableMap(CouplingTable table) : t_(std::move(table)) {
    detail::validate_axis(t_.w0_grid_nm, "w0");
    detail::validate_axis(t_.w1_grid_nm, "w1");
    if (t_.nodes.size() != t_.w0_grid_nm.size() * t_.w1_grid_nm.size()) {
      throw std::invalid_argument("coupling table: node count does not match grid");
    }
  }

  const CouplingTable& table() const { return t_; }

  SegmentCoefficients lookup(double w0_nm, double w1_nm) const override {
    check_range(w0_nm, w1_nm);
    const auto [i0, u] = cell(t_.w0_grid_nm, w0_nm);
    const auto [i1, v] = cell(t_.w1_grid_nm, w1_nm);
    const auto& c00 = t_.at(i0, i1);
    const auto& c01 = t_.at(i0, i1 + 1);
    const auto& c10 = t_.at(i0 + 1, i1);
    const auto& c11 = t_.at(i0 + 1, i1 + 1);
    auto lerp2 = [&](double f00, double f01, double f10, double f11) {
      return (1.0 - u) * (1.0 - v) * f00 + (1.0 - u) * v * f01 +
             u * (1.0 - v) * f10 + u * v * f11;
    };
    SegmentCoefficients c{};
    c.kappa_per_um = lerp2(c00.kappa_per_um, c01.kappa_per_um,
                           c10.kappa_per_um, c11.kappa_per_um);
    c.delta_per_um = lerp2(c00.delta_per_um, c01.delta_per_um,
                           c10.delta_per_um, c11.delta_per_um);
    c.n_eff0 = lerp2(c00.n_eff0, c01.n_eff0, c10.n_eff0, c11.n_eff0);
    c.n_eff1 = lerp2(c00.n_eff1, c01.n_eff1, c10.n_eff1, c11.n_eff1);
    return c;
  }

  double min_width_nm() const override {
    return std::max(t_.w0_grid_nm.front(), t_.w1_grid_nm.front());
  }
  double max_width_nm() const override {
    return std::min(t_.w0_grid_nm.back(), t_.w1_grid_nm.back());
  }

 private:
  // Cell index and local coordinate in [0, 1]; the top edge maps to the
  // last cell with coordinate exactly 1 so node queries reproduce node
  // values bit-exactly.
  static std::pair<std::size_t, double> cell(const std::vector<double>& axis,
                                             double w) {
    auto it = std::upper_bound(axis.begin(), axis.end(), w);
    std::size_t hi = static_cast<std::size_t>(it - axis.begin());
    hi = std::clamp<std::size_t>(hi, 1, axis.size() - 1);
    const std::size_t lo = hi - 1;
    double frac = (w - axis[lo]) / (axis[hi] - axis[lo]);
    if (w == axis[lo]) frac = 0.0;
    if (w == axis[hi]) frac = 1.0;
    return {lo, frac};
  }

  CouplingTable t_;
};

// Reads the table CSV format:
//   w0_nm,w1_nm,kappa_per_um,delta_per_um,neff0,neff1
// The rows must cover a complete rectilinear grid; missing nodes,
// duplicates with conflicting values and non-finite entries are rejected.
inline CouplingTable load_table(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("coupling table: empty file");
  }
  if (line.size() && line.back() == '\r') line.pop_back();
  if (line != "w0_nm,w1_nm,kappa_per_um,delta_per_um,neff0,neff1") {
    throw std::invalid_argument("coupling table: unexpected header '" + line +
                                "'");
  }

  std::map<std::pair<double, double>, SegmentCoefficients> records;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream ss(line);
    double field[6];
    char comma = ',';
    for (int f = 0; f < 6; ++f) {
      if (f > 0 && !(ss >> comma && comma == ',')) {
        throw std::invalid_argument("coupling table: malformed row at line " +
                                    std::to_string(lineno));
      }
      if (!(ss >> field[f]) || !std::isfinite(field[f])) {
        throw std::invalid_argument(
            "coupling table: non-numeric or non-finite value at line " +
            std::to_string(lineno));
      }
    }
    SegmentCoefficients c{field[2], field[3], field[4], field[5]};
    auto key = std::make_pair(field[0], field[1]);
    auto [it, inserted] = records.emplace(key, c);
    if (!inserted) {
      const auto& old = it->second;
      if (old.kappa_per_um != c.kappa_per_um ||
          old.delta_per_um != c.delta_per_um || old.n_eff0 != c.n_eff0 ||
          old.n_eff1 != c.n_eff1) {
        throw std::invalid_argument(
            "coupling table: duplicate node with conflicting values at line " +
            std::to_string(lineno));
      }
      throw std::invalid_argument("coupling table: duplicate node at line " +
                                  std::to_string(lineno));
    }
  }
  if (records.empty()) {
    throw std::invalid_argument("coupling table: no data rows");
  }

  CouplingTable table;
  std::vector<double> w0s, w1s;
  for (const auto& [key, c] : records) {
    if (w0s.empty() || w0s.back() != key.first) w0s.push_back(key.first);
  }
  for (const auto& [key, c] : records) {
    if (key.first == w0s.front()) w1s.push_back(key.second);
  }
  if (records.size() != w0s.size() * w1s.size()) {
    throw std::invalid_argument(
        "coupling table: rows do not form a complete grid (" +
        std::to_string(records.size()) + " nodes, expected " +
        std::to_string(w0s.size() * w1s.size()) + ")");
  }
  detail::validate_axis(w0s, "w0");
  detail::validate_axis(w1s, "w1");
  table.w0_grid_nm = std::move(w0s);
  table.w1_grid_nm = std::move(w1s);
  table.nodes.reserve(records.size());
  for (double w0 : table.w0_grid_nm) {
    for (double w1 : table.w1_grid_nm) {
      auto it = records.find({w0, w1});
      if (it == records.end()) {
        throw std::invalid_argument(
            "coupling table: missing grid node (" + std::to_string(w0) + ", " +
            std::to_string(w1) + ")");
      }
      table.nodes.push_back(it->second);
    }
  }
  return table;
}

inline CouplingTable load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::invalid_argument("coupling table: cannot open '" + path + "'");
  }
  return load_table(in);
}

// Samples a map onto a uniform square grid, e.g. to export a surrogate in
// the table CSV format.
inline CouplingTable tabulate_map(const CouplingMap& map, double w_lo_nm,
                                  double w_hi_nm, double step_nm) {
  if (!(step_nm > 0.0) || !(w_hi_nm > w_lo_nm)) {
    throw std::invalid_argument("tabulate_map: invalid grid");
  }
  const int count =
      static_cast<int>(std::round((w_hi_nm - w_lo_nm) / step_nm)) + 1;
  if (count < 2) {
    throw std::invalid_argument("tabulate_map: grid needs at least 2 nodes per axis");
  }
  CouplingTable t;
  t.w0_grid_nm.reserve(count);
  for (int i = 0; i < count; ++i) {
    t.w0_grid_nm.push_back(w_lo_nm + step_nm * i);
  }
  t.w1_grid_nm = t.w0_grid_nm;
  t.nodes.reserve(static_cast<std::size_t>(count) * count);
  for (double w0 : t.w0_grid_nm) {
    for (double w1 : t.w1_grid_nm) {
      t.nodes.push_back(map.lookup(w0, w1));
    }
  }
  return t;
}

}  // namespace segwave
