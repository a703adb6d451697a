#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rwre/numerics.hpp"

namespace rwre {

/// Brownian motion sigma W(t) + nu t observed up to an independent
/// exponential horizon T of mean mu; `a` is the draw-up level.
struct DriftedBMParams {
  double sigma = 1.0;
  double nu = 0.0;
  double mu = 1.0;
  double a = 0.0;

  void validate() const;
};

/// P[D+_[0,T] > a], closed form, evaluated through logarithms.
double prop0_survival(const DriftedBMParams& p);

/// 1 / (1 + sigma^2/(2 nu^2 mu) exp(2 |nu| a / sigma^2)); needs nu < 0.
double cor1_asymptotic(const DriftedBMParams& p);

/// Monte Carlo frequency of {discrete draw-up > a} on step dt.
Frequency mc_drawup_survival(const DriftedBMParams& p, double dt, std::size_t n_paths,
                             std::uint64_t seed, unsigned threads = 0,
                             std::uint64_t* steps_out = nullptr);

/// Same paths, several levels at once (p.a is ignored). Each path stops as
/// soon as its draw-up exceeds the largest level.
std::vector<Frequency> mc_drawup_survival_levels(const DriftedBMParams& p,
                                                 std::span<const double> levels, double dt,
                                                 std::size_t n_paths, std::uint64_t seed,
                                                 unsigned threads = 0,
                                                 std::uint64_t* steps_out = nullptr);

}  // namespace rwre
