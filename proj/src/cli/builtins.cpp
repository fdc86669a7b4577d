#include "implreg/builtins.hpp"

#include <cmath>

#include "implreg/errors.hpp"
#include "implreg/rng.hpp"
#include "implreg/trainer.hpp"

namespace implreg::builtins {

namespace {

using Stream = CounterRng::Stream;

Dataset from_xy(const std::vector<double>& xs, const std::vector<double>& ys) {
  Dataset d;
  for (std::size_t i = 0; i < xs.size(); ++i) d.points.push_back({Vector{xs[i]}, ys[i]});
  return d;
}

}  // namespace

Dataset fig1d() {
  return from_xy({-1.8, -1.4, -1.0, -0.6, -0.2, 0.2, 0.6, 1.0, 1.3, 1.6, 1.9, 2.3},
                 {0.9, 0.1, -0.4, -0.6, -0.2, 0.2, 0.6, 0.8, 0.85, 0.8, 0.6, 0.2});
}

Dataset tanh_sparsity_1d(std::uint64_t seed) {
  const CounterRng rng(seed);
  const double centers[3] = {-1.5, 0.0, 1.5};
  const double levels[3] = {-0.5, 0.5, -0.5};
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t c = i / 2;
    xs.push_back(centers[c] + 0.1 * rng.normal(Stream::Dataset, 2 * i));
    ys.push_back(levels[c] + 0.05 * rng.normal(Stream::Dataset, 2 * i + 1));
  }
  return from_xy(xs, ys);
}

Dataset tanh_sparsity_5d(std::uint64_t seed) {
  const CounterRng rng(seed);
  std::uint64_t k = 0;
  // teacher unit drawn from the seed, then normalised
  Vector w(5);
  for (double& v : w) v = rng.normal(Stream::Dataset, k++);
  const double wn = norm(w);
  for (double& v : w) v /= wn;
  Dataset d;
  for (int i = 0; i < 30; ++i) {
    Vector x(5);
    for (double& v : x) v = rng.normal(Stream::Dataset, k++);
    const double u = rng.uniform(Stream::Dataset, k++);
    const double y = i < 20 ? std::tanh(dot(w, x)) : (u < 0.5 ? -1.0 : 1.0);
    d.points.push_back({std::move(x), y});
  }
  return d;
}

Dataset gaussian_toy(std::size_t n, std::size_t d, double input_scale, std::uint64_t seed) {
  require(n > 0 && d > 0 && input_scale > 0.0, ErrorKind::InvalidInput,
          "gaussian_toy: need n, d, input_scale > 0");
  const CounterRng rng(seed);
  Dataset out;
  for (std::size_t i = 0; i < n; ++i) {
    Vector x(d);
    for (std::size_t j = 0; j < d; ++j)
      x[j] = input_scale * rng.normal(Stream::Dataset, (d + 1) * i + j);
    out.points.push_back({std::move(x), rng.normal(Stream::Dataset, (d + 1) * i + d)});
  }
  return out;
}

Dataset single_point() {
  Dataset d;
  d.points.push_back({Vector{12.0, -12.0, 12.0}, 0.25});
  return d;
}

std::vector<GeneratorInfo> generators() {
  return {
      {"fig1d", "fixed 12 points, convex / collinear / concave sections (seed unused)"},
      {"tanh_sparsity_1d", "6 points in 3 clusters"},
      {"tanh_sparsity_5d", "20 Gaussian points in 5-d with a tanh teacher, plus 10 random +-1 points"},
      {"gaussian", "n points x ~ input_scale N(0, I_d), y ~ N(0, 1)"},
      {"ou_toy", "4 Gaussian points in 2-d"},
      {"single_point", "x = (12, -12, 12), y = 0.25 (seed unused)"},
      {"two_copy", "(x, y +- delta) for every point of another builtin"},
  };
}

Dataset generate(const std::string& name, std::uint64_t seed, const GeneratorParams& p) {
  if (name == "fig1d") return fig1d();
  if (name == "tanh_sparsity_1d") return tanh_sparsity_1d(seed);
  if (name == "tanh_sparsity_5d") return tanh_sparsity_5d(seed);
  if (name == "gaussian") return gaussian_toy(p.n, p.d, p.input_scale, seed);
  if (name == "ou_toy") return gaussian_toy(4, 2, p.input_scale, seed);
  if (name == "single_point") return single_point();
  if (name == "two_copy") {
    require(p.base != "two_copy", ErrorKind::InvalidInput, "two_copy: base cannot be two_copy");
    return two_copy_transform(generate(p.base, seed, p), p.delta);
  }
  fail(ErrorKind::InvalidInput, "unknown builtin dataset '" + name + "'");
}

}  // namespace implreg::builtins
