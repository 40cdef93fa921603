#include "cips3d/posenc.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>

namespace cips3d::posenc {

std::vector<double> gamma_encode(double t, std::size_t levels) {
  std::vector<double> out;
  out.reserve(2 * levels);
  for (std::size_t k = 0; k < levels; ++k) {
    const double angle = std::ldexp(1.0, static_cast<int>(k)) * t * std::numbers::pi;
    out.push_back(std::sin(angle));
    out.push_back(std::cos(angle));
  }
  return out;
}

std::vector<double> t_encode(const Point& p, std::size_t levels) {
  std::vector<double> out(p.begin(), p.end());
  out.reserve(3 + 6 * levels);
  for (double v : p) {
    const auto g = gamma_encode(v, levels);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

double encoded_distance(const Point& a, const Point& b, std::size_t levels) {
  const auto ea = t_encode(a, levels);
  const auto eb = t_encode(b, levels);
  double s = 0;
  for (std::size_t i = 0; i < ea.size(); ++i) s += (ea[i] - eb[i]) * (ea[i] - eb[i]);
  return std::sqrt(s);
}

std::vector<CurveRow> distance_curve(const Point& a, const Point& b, const Point& c, std::size_t l_max) {
  std::vector<CurveRow> rows;
  rows.reserve(l_max + 1);
  for (std::size_t l = 0; l <= l_max; ++l) rows.push_back({l, encoded_distance(a, b, l), encoded_distance(a, c, l)});
  return rows;
}

void write_curve_csv(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << "L,d_ab,d_ac\n";
  for (const auto& r : rows) out << fmt::format("{},{:.9g},{:.9g}\n", r.levels, r.d_ab, r.d_ac);
}

std::optional<std::size_t> crossover(const std::vector<CurveRow>& rows, double margin) {
  std::optional<std::size_t> first;
  for (const auto& r : rows) {
    if (r.d_ab > r.d_ac + margin) {
      if (!first) first = r.levels;
    } else {
      first.reset();
    }
  }
  return first;
}

Triple counterexample_triple() {
  const double deg = std::numbers::pi / 180.0;
  return {{std::cos(70 * deg), 0.0, std::sin(70 * deg)},
          {std::cos(80 * deg), 0.0, std::sin(80 * deg)},
          {-std::cos(70 * deg), 0.0, std::sin(70 * deg)}};
}

CounterexampleReport check_counterexample(std::size_t levels, double margin) {
  const auto [a, b, c] = counterexample_triple();
  CounterexampleReport r;
  r.levels = levels;
  r.margin = margin;
  r.raw_ab = encoded_distance(a, b, 0);
  r.raw_ac = encoded_distance(a, c, 0);
  r.encoded_ab = encoded_distance(a, b, levels);
  r.encoded_ac = encoded_distance(a, c, levels);
  r.raw_order = r.raw_ab + margin < r.raw_ac;
  r.encoded_order = r.encoded_ab > r.encoded_ac + margin;
  return r;
}

}  // namespace cips3d::posenc
