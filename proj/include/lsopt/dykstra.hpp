#pragma once

#include "lsopt/prox_ops.hpp"
#include "lsopt/solver_report.hpp"

#include <optional>
#include <vector>

namespace lsopt {

struct DykstraConfig {
  double tol = 1e-10;
  int max_cycles = 10000;
};

// Four-line iteration for prox_{f1 + f2}(v).
Solution dykstra_two(const ProxFn& f1, const ProxFn& f2, const Vector& v, const DykstraConfig& cfg = {});

// Double-index form for m functions; one residual per function.
Solution dykstra_cycle(const std::vector<ProxFn>& fns, const Vector& v, const DykstraConfig& cfg = {});

// Row-by-row half-space sweep over {x : C x <= D}.
Solution project_polyhedron(const Matrix& C, const Vector& D, const Vector& v, const DykstraConfig& cfg = {});

struct LinearSet {
  std::optional<Matrix> A;
  std::optional<Vector> B;
  std::optional<Matrix> C;
  std::optional<Vector> D;
  std::optional<Vector> lower;
  std::optional<Vector> upper;
};

// Projection onto {A x = B, C x <= D, lower <= x <= upper}.
Solution project_general_linear(const LinearSet& set, const Vector& v, const DykstraConfig& cfg = {});

Solution project_box_ball(const Vector& v, const Vector& lower, const Vector& upper, const Vector& center,
                          double radius, const DykstraConfig& cfg = {});

}  // namespace lsopt
