#pragma once

#include "lsopt/universe.hpp"

#include <cstdint>
#include <optional>

namespace lsopt {

struct ParameterSet {
  AssetUniverse universe;
  std::optional<Vector> benchmark;
};

// Eight-stock cap-weighted index. Expected returns are not part of the data
// and are left at zero. The benchmark's fourth weight (13%) is reconstructed.
ParameterSet parameter_set_1();

// Eight stocks for the MDP examples, with the last volatility at 25%, the
// value under which the reference MDP weights are reproduced.
ParameterSet parameter_set_2();

// Same as parameter_set_2 but with the last volatility at 35% as listed with the data.
ParameterSet parameter_set_2_as_printed();

struct LassoData {
  Matrix X;
  Vector Y;
  Vector beta;
};

inline constexpr double kLassoLargeBeta = 6.0;
inline constexpr double kLassoNoiseSd = 0.2;

// Uniform [0,1] design, betas U(-3, 3) with four set to +/-6, Gaussian noise
// of sd 0.2; X columns and Y are then standardized.
LassoData lasso_synthetic(Eigen::Index n = 10000, Eigen::Index p = 50, std::uint64_t seed = 1);

struct BoxQpExample {
  Matrix Q;
  Vector R;
  double lower = -0.5;
  double upper = 1.0;
};

// 5 x 5 problem used for the CCD convergence plots.
BoxQpExample box_qp_example();

}  // namespace lsopt
