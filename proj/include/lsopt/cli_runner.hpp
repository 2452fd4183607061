#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

namespace lsopt {

enum class OutputFormat { Json, Csv };

struct RunSpec {
  std::string command;
  // Reproduction name for the reproduce command.
  std::string target;
  std::string input;
  // Empty writes to the output stream.
  std::string output;
  OutputFormat format = OutputFormat::Json;
  std::optional<double> tol;
  std::optional<double> phi;
  std::optional<std::uint64_t> seed;
  std::optional<int> max_iter;
};

namespace exit_code {
inline constexpr int kOk = 0;
inline constexpr int kInput = 2;
inline constexpr int kDomain = 3;
inline constexpr int kMismatch = 4;
}  // namespace exit_code

// Runs one command; diagnostics go to err. Returns the process exit code.
int run_command(const RunSpec& spec, std::ostream& out, std::ostream& err);

// Request bodies without file I/O; the returned text is the formatted result.
std::string cmd_prox(const std::string& request, const RunSpec& spec);
std::string cmd_project(const std::string& request, const RunSpec& spec);
std::string cmd_qp(const std::string& request, const RunSpec& spec);
std::string cmd_allocate(const std::string& request, const RunSpec& spec);

}  // namespace lsopt
