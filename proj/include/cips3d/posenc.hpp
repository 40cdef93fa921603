#pragma once

// Fixed sinusoidal positional encoding and the distance analysis showing it
// does not preserve the ordering of Euclidean distances.
//
//   gamma(t; L)     = (sin(2^0 pi t), cos(2^0 pi t), ..., sin(2^{L-1} pi t), cos(2^{L-1} pi t))
//   T(x, y, z; L)   = (x, y, z, gamma(x; L), gamma(y; L), gamma(z; L))

#include <array>
#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

namespace cips3d::posenc {

using Point = std::array<double, 3>;

std::vector<double> gamma_encode(double t, std::size_t levels);

/// Length 3 + 6L.
std::vector<double> t_encode(const Point& p, std::size_t levels);

double encoded_distance(const Point& a, const Point& b, std::size_t levels);

struct CurveRow {
  std::size_t levels = 0;
  double d_ab = 0;
  double d_ac = 0;
};

/// One row per L in [0, l_max].
std::vector<CurveRow> distance_curve(const Point& a, const Point& b, const Point& c, std::size_t l_max);

/// Header `L,d_ab,d_ac`, 9 significant digits.
void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows);

/// Smallest L such that d_ab > d_ac for this and every later row, if any.
std::optional<std::size_t> crossover(const std::vector<CurveRow>& rows, double margin = 0.0);

/// a = (cos 70, 0, sin 70), b = (cos 80, 0, sin 80), c = (-cos 70, 0, sin 70), angles in degrees.
struct Triple {
  Point a, b, c;
};
Triple counterexample_triple();

struct CounterexampleReport {
  std::size_t levels = 10;
  double raw_ab = 0;      // d(a, b)
  double raw_ac = 0;      // d(a, c)
  double encoded_ab = 0;  // d(T(a), T(b))
  double encoded_ac = 0;  // d(T(a), T(c))
  double margin = 1e-6;
  bool raw_order = false;      // raw_ab + margin < raw_ac
  bool encoded_order = false;  // encoded_ab > encoded_ac + margin
  bool pass() const { return raw_order && encoded_order; }
};

/// Evaluates both inequalities of the counterexample at `levels`.
CounterexampleReport check_counterexample(std::size_t levels = 10, double margin = 1e-6);

}  // namespace cips3d::posenc
