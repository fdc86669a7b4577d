#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "implreg/model.hpp"

namespace implreg::builtins {

/// Fixed synthetic 12-point 1-d set: convex on the left, four collinear points
/// on y = x over [-0.6, 0.6], concave on the right.
Dataset fig1d();
/// First index of a collinear triple of fig1d().
inline constexpr std::size_t kFig1dCollinearTriple = 3;

/// Six 1-d points in three tight clusters (x near -1.5, 0, 1.5).
Dataset tanh_sparsity_1d(std::uint64_t seed);

/// 20 points x ~ N(0, I_5) labelled by a fixed single tanh unit, plus 10
/// points x ~ N(0, I_5) with labels +-1 at random.
Dataset tanh_sparsity_5d(std::uint64_t seed);

/// n points in d dimensions, x ~ input_scale * N(0, I), y ~ N(0, 1).
Dataset gaussian_toy(std::size_t n, std::size_t d, double input_scale, std::uint64_t seed);

/// The 4-point, 2-d toy used for the fluctuation and drift checks.
inline Dataset ou_toy(std::uint64_t seed = 3, double input_scale = 2.0) {
  return gaussian_toy(4, 2, input_scale, seed);
}
inline Architecture ou_toy_arch() { return {2, 5, Activation::Tanh, false}; }

/// One datapoint x = (12, -12, 12), y = 0.25.
Dataset single_point();

struct GeneratorInfo {
  std::string name;
  std::string description;
};
std::vector<GeneratorInfo> generators();

/// Generator dispatch by name. `seed` feeds the seeded generators; params
/// recognised: input_scale, n, d (gaussian), delta and base (two_copy).
struct GeneratorParams {
  double input_scale = 1.0;
  std::size_t n = 4;
  std::size_t d = 2;
  double delta = 0.5;
  std::string base = "fig1d";
};
Dataset generate(const std::string& name, std::uint64_t seed, const GeneratorParams& params);

}  // namespace implreg::builtins
