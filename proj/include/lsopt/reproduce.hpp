#pragma once

#include "lsopt/core_numerics.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace lsopt {

struct ReproCheck {
  enum class Kind { Near, AtMost, AtLeast };
  std::string label;
  double expected = 0.0;
  double actual = 0.0;
  double tol = 0.0;
  Kind kind = Kind::Near;

  // Infinite expected values match only the same infinity.
  double diff() const;
  bool ok() const;
};

// A numeric table (CSV body) plus the checks against the reference values.
struct Reproduction {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<ReproCheck> checks;

  bool ok() const;
  // Largest |actual - expected| among Near checks.
  double max_diff() const;
};

// Minimum variance portfolios under an effective-bets floor (parameter set 1).
Reproduction reproduce_table4();
// Maximum diversification portfolios (parameter set 2).
Reproduction reproduce_table5();
// ERC weights on parameter set 1 and the CCD cycle count at 1e-8.
Reproduction reproduce_erc();
// Per-cycle CCD lasso coefficients on the synthetic fixture.
Reproduction reproduce_lasso_trace(std::uint64_t seed = 1);
// Per-cycle CCD iterates on the 5 x 5 box QP from 0 and 1, plus the unconstrained run.
Reproduction reproduce_box_qp_trace();

const std::vector<std::string>& reproduction_names();
// Throws InvalidArgument for unknown names.
Reproduction reproduce(const std::string& name);

std::string to_csv(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows);
std::string diff_report(const Reproduction& r);

}  // namespace lsopt
