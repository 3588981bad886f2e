#pragma once

// Entry points behind `optrec solve | verify | converge`.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace optrec::cli {

enum ExitCode : int {
  kOk = 0,
  kSpecError = 1,
  kInfeasible = 2,
  kNumericalFailure = 3,
  kVerifyFailed = 4,
};

inline constexpr double kDefaultTolerance = 1e-8;
inline constexpr int kDefaultGridSize = 128;
inline constexpr int kDefaultSamples = 1000;

struct SolveFlags {
  std::optional<double> tol;
  std::optional<int> N;
  std::optional<int> K;
  std::string out_path;   ///< empty: stdout
  std::string dump_path;  ///< triplet dump of the assembled programs
  int samples = kDefaultSamples;
  std::uint64_t seed = 0;
};

struct VerifyFlags {
  int samples = kDefaultSamples;
  std::uint64_t seed = 0;
  std::string out_path;  ///< empty: rewrite the result file in place
};

struct ConvergeFlags {
  std::optional<double> tol;
  std::vector<int> N_list;  ///< empty: max(n, m) doubled up to 256
  std::vector<int> K_list;  ///< empty: 64, 128, 256
  std::string out_path;     ///< JSON; empty: stdout
  bool parallel = true;
};

int cmd_solve(const std::string& spec_path, const SolveFlags& flags, std::ostream& out,
              std::ostream& err);
int cmd_verify(const std::string& result_path, const VerifyFlags& flags, std::ostream& out,
               std::ostream& err);
int cmd_converge(const std::string& spec_path, const ConvergeFlags& flags, std::ostream& out,
                 std::ostream& err);

/// Parses "8,16,32".
std::vector<int> parse_int_list(const std::string& text, const std::string& field);

}  // namespace optrec::cli
