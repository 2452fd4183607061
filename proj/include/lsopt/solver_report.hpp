#pragma once

#include "lsopt/core_numerics.hpp"

#include <string>
#include <vector>

namespace lsopt {

enum class SolverStatus { Converged, MaxIter };

const char* to_string(SolverStatus s);

// Observability record shared by every iterative engine. For cycle-based
// engines (CD, Dykstra) one iteration is one full cycle.
struct SolverReport {
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::vector<double> primal_trace;
  std::vector<double> dual_trace;
  // Filled only when the caller supplies an objective.
  std::vector<double> objective_trace;
  SolverStatus status = SolverStatus::MaxIter;

  bool converged() const { return status == SolverStatus::Converged; }
};

struct Solution {
  Vector x;
  SolverReport report;

  // Throws MaxIterExceeded unless converged.
  const Vector& value() const;
};

}  // namespace lsopt
