#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "errors.hpp"
#include "grid.hpp"
#include "regularizer.hpp"

namespace wigvol {

namespace negativity_detail {

inline void check_finite(const WignerField& f) {
  if (static_cast<long>(f.values.size()) != f.grid.size())
    throw Error(ErrorKind::DimensionMismatch, "field has " + std::to_string(f.values.size()) + " values for " +
                                                  std::to_string(f.grid.size()) + " grid points");
  for (double v : f.values)
    if (!std::isfinite(v)) throw Error(ErrorKind::ConfigError, "field has non-finite values");
}

inline void check_mask(const WignerField& f, const std::vector<char>* mask) {
  if (mask && static_cast<long>(mask->size()) != f.grid.size())
    throw Error(ErrorKind::DimensionMismatch, "mask length differs from the grid size");
}

// sums in index order so results are reproducible
template <class F>
double riemann(const WignerField& f, const std::vector<char>* mask, F&& part) {
  double s = 0;
  for (size_t i = 0; i < f.values.size(); ++i)
    if (!mask || (*mask)[i]) s += part(f.values[i]);
  return s * f.grid.cell_volume();
}

}  // namespace negativity_detail

// int 1/2 (W - |W|) over the grid
inline double negative_volume(const WignerField& f, const std::vector<char>* mask = nullptr) {
  negativity_detail::check_finite(f);
  negativity_detail::check_mask(f, mask);
  return negativity_detail::riemann(f, mask, [](double v) { return std::min(v, 0.0); });
}

inline double positive_volume(const WignerField& f, const std::vector<char>* mask = nullptr) {
  negativity_detail::check_finite(f);
  negativity_detail::check_mask(f, mask);
  return negativity_detail::riemann(f, mask, [](double v) { return std::max(v, 0.0); });
}

inline double total_volume(const WignerField& f, const std::vector<char>* mask = nullptr) {
  negativity_detail::check_finite(f);
  negativity_detail::check_mask(f, mask);
  return negativity_detail::riemann(f, mask, [](double v) { return v; });
}

inline double mask_fraction(const std::vector<char>& mask) {
  if (mask.empty()) return 0.0;
  const long kept = std::count(mask.begin(), mask.end(), char(1));
  return 1.0 - double(kept) / double(mask.size());
}

struct NegativityReport {
  double raw = 0;          // <= 0
  double norm_factor = 1;  // > 0
  double normalized = 0;   // raw / norm_factor
  double mask_fraction = 0;
  double epsilon = 0;
  std::string family;
  std::string set_id;
  std::string kernel;
  std::string reference;
};

inline NegativityReport normalized_negativity(const WignerField& f, const Regularizer& reg, const Regularizer& reference,
                                              const std::vector<char>* mask = nullptr) {
  NegativityReport r;
  r.raw = negative_volume(f, mask);
  r.norm_factor = norm_factor(reg, reference);
  r.normalized = r.raw / r.norm_factor;
  r.mask_fraction = mask ? mask_fraction(*mask) : 0.0;
  r.epsilon = reg.epsilon();
  r.set_id = f.set_id;
  r.kernel = reg.describe();
  r.reference = reference.describe();
  return r;
}

}  // namespace wigvol
