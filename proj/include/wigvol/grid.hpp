#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "operators.hpp"
#include "regularizer.hpp"

namespace wigvol {

struct GridAxis {
  double min = -1, max = 1;
  int count = 65;

  double step() const { return (max - min) / (count - 1); }
  double at(int i) const { return i == count - 1 ? max : min + i * step(); }
};

inline constexpr long kMaxGridPoints = 10'000'000;

class PhaseGrid {
 public:
  PhaseGrid() = default;
  explicit PhaseGrid(std::vector<GridAxis> axes) : axes_(std::move(axes)) {
    if (axes_.empty()) throw Error(ErrorKind::ConfigError, "grid needs at least one axis");
    long total = 1;
    for (const auto& a : axes_) {
      if (a.count < 8) throw Error(ErrorKind::ConfigError, "grid axis needs at least 8 points");
      if (!(a.max > a.min)) throw Error(ErrorKind::ConfigError, "grid axis needs max > min");
      total *= a.count;
      if (total > kMaxGridPoints) throw Error(ErrorKind::TooLarge, "grid exceeds 1e7 points");
    }
  }

  int n() const { return static_cast<int>(axes_.size()); }
  const std::vector<GridAxis>& axes() const { return axes_; }
  const GridAxis& axis(int k) const { return axes_.at(k); }

  long size() const {
    long s = 1;
    for (const auto& a : axes_) s *= a.count;
    return s;
  }

  double cell_volume() const {
    double v = 1;
    for (const auto& a : axes_) v *= a.step();
    return v;
  }

  // row-major: the last axis varies fastest
  void index_to_multi(long idx, int* m) const {
    for (int k = n() - 1; k >= 0; --k) {
      m[k] = static_cast<int>(idx % axes_[k].count);
      idx /= axes_[k].count;
    }
  }

  Eigen::VectorXd point(long idx) const {
    std::vector<int> m(n());
    index_to_multi(idx, m.data());
    Eigen::VectorXd a(n());
    for (int k = 0; k < n(); ++k) a(k) = axes_[k].at(m[k]);
    return a;
  }

  static int default_count(int n) { return n <= 2 ? 257 : (n == 3 ? 129 : 49); }

  // joint numerical range box padded by max(0.25, 5 sqrt(eps))
  static PhaseGrid default_for(const OperatorSet& set, double eps, int count = 0) {
    const double pad = std::max(0.25, 5.0 * std::sqrt(eps));
    const int c = count > 0 ? count : default_count(set.n());
    std::vector<GridAxis> axes;
    for (auto [lo, hi] : set.eigen_ranges()) axes.push_back({lo - pad, hi + pad, c});
    return PhaseGrid(axes);
  }

  // joint numerical range box, each axis widened by pad times its length
  static PhaseGrid fitted(const OperatorSet& set, double pad, int count) {
    std::vector<GridAxis> axes;
    for (auto [lo, hi] : set.eigen_ranges()) axes.push_back({lo - pad * (hi - lo), hi + pad * (hi - lo), count});
    return PhaseGrid(axes);
  }

 private:
  std::vector<GridAxis> axes_;
};

struct WignerField {
  PhaseGrid grid;
  std::vector<double> values;
  Regularizer reg;
  std::string state_id;
  std::string set_id;
  std::string method;
  double imag_residue = 0;  // max|Im| / max|Re| where measurable
  std::vector<double> cutoff;

  double max_abs() const {
    double m = 0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
  double min_value() const { return values.empty() ? 0 : *std::min_element(values.begin(), values.end()); }
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

inline void write_field_csv(const WignerField& f, std::ostream& os) {
  const int n = f.grid.n();
  for (int k = 0; k < n; ++k) os << 'a' << (k + 1) << ',';
  os << "w\n";
  for (long i = 0; i < f.grid.size(); ++i) {
    const Eigen::VectorXd a = f.grid.point(i);
    for (int k = 0; k < n; ++k) os << format_double(a(k)) << ',';
    os << format_double(f.values[i]) << '\n';
  }
}

}  // namespace wigvol
