#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <string_view>

namespace segwave {

using complexd = std::complex<double>;

// 2x2 complex matrix representing an SU(2)/U(2) gate. Entries are stored
// row-major: u00 u01 / u10 u11.
struct Unitary2 {
  complexd u00{1.0, 0.0};
  complexd u01{0.0, 0.0};
  complexd u10{0.0, 0.0};
  complexd u11{1.0, 0.0};

  static Unitary2 identity() { return {}; }

  Unitary2 dagger() const {
    return {std::conj(u00), std::conj(u10), std::conj(u01), std::conj(u11)};
  }

  complexd trace() const { return u00 + u11; }
  complexd det() const { return u00 * u11 - u01 * u10; }

  Unitary2 operator*(const Unitary2& r) const {
    return {u00 * r.u00 + u01 * r.u10, u00 * r.u01 + u01 * r.u11,
            u10 * r.u00 + u11 * r.u10, u10 * r.u01 + u11 * r.u11};
  }

  Unitary2 operator+(const Unitary2& r) const {
    return {u00 + r.u00, u01 + r.u01, u10 + r.u10, u11 + r.u11};
  }

  Unitary2 operator*(complexd s) const {
    return {s * u00, s * u01, s * u10, s * u11};
  }

  std::array<complexd, 2> apply(const std::array<complexd, 2>& v) const {
    return {u00 * v[0] + u01 * v[1], u10 * v[0] + u11 * v[1]};
  }

  // max_jk |(U^dagger U - I)_jk|
  double unitarity_error() const {
    const Unitary2 g = dagger() * (*this);
    double e = std::abs(g.u00 - 1.0);
    e = std::max(e, std::abs(g.u01));
    e = std::max(e, std::abs(g.u10));
    e = std::max(e, std::abs(g.u11 - 1.0));
    return e;
  }

  double max_entry_distance(const Unitary2& r) const {
    double e = std::abs(u00 - r.u00);
    e = std::max(e, std::abs(u01 - r.u01));
    e = std::max(e, std::abs(u10 - r.u10));
    e = std::max(e, std::abs(u11 - r.u11));
    return e;
  }
};

inline Unitary2 pauli_x() { return {{0, 0}, {1, 0}, {1, 0}, {0, 0}}; }
inline Unitary2 pauli_y() { return {{0, 0}, {0, -1}, {0, 1}, {0, 0}}; }
inline Unitary2 pauli_z() { return {{1, 0}, {0, 0}, {0, 0}, {-1, 0}}; }

inline Unitary2 hadamard() {
  const double s = 1.0 / std::sqrt(2.0);
  return {{s, 0}, {s, 0}, {s, 0}, {-s, 0}};
}

// Principal square root of X, eigenvalues {1, i}:
// (1/2) [[1+i, 1-i], [1-i, 1+i]].
inline Unitary2 sqrt_x() {
  const complexd p{0.5, 0.5};
  const complexd m{0.5, -0.5};
  return {p, m, m, p};
}

// Rotation by `angle` about unit axis n: exp(-i (angle/2) n.sigma)
// = cos(angle/2) I - i sin(angle/2) n.sigma.
inline Unitary2 axis_angle_gate(const std::array<double, 3>& axis,
                                double angle_rad) {
  const double norm = std::sqrt(axis[0] * axis[0] + axis[1] * axis[1] +
                                axis[2] * axis[2]);
  if (!(norm > 0.0)) {
    throw std::invalid_argument("axis_angle_gate: zero axis");
  }
  const double nx = axis[0] / norm, ny = axis[1] / norm, nz = axis[2] / norm;
  const double c = std::cos(angle_rad / 2.0);
  const double s = std::sin(angle_rad / 2.0);
  const complexd i{0.0, 1.0};
  return {c - i * (s * nz), -i * (s * nx) - (s * ny),
          -i * (s * nx) + (s * ny), c + i * (s * nz)};
}

inline Unitary2 ideal_gate(std::string_view name) {
  std::string lower;
  for (char c : name) lower.push_back(static_cast<char>(std::tolower(c)));
  if (lower == "x") return pauli_x();
  if (lower == "y") return pauli_y();
  if (lower == "z") return pauli_z();
  if (lower == "h" || lower == "hadamard") return hadamard();
  if (lower == "sqrtx" || lower == "sqrt_x") return sqrt_x();
  if (lower == "i" || lower == "identity") return Unitary2::identity();
  throw std::invalid_argument("ideal_gate: unknown gate name '" +
                              std::string(name) + "'");
}

// Bloch vector of a pure state (a, b):
// x = 2 Re(a* b), y = 2 Im(a* b), z = |a|^2 - |b|^2.
inline std::array<double, 3> bloch_vector(const std::array<complexd, 2>& psi) {
  const complexd cross = std::conj(psi[0]) * psi[1];
  return {2.0 * cross.real(), 2.0 * cross.imag(),
          std::norm(psi[0]) - std::norm(psi[1])};
}

}  // namespace segwave
