#pragma once

// JSON specification and result files.

#include <optional>
#include <string>

#include "json.hpp"
#include "optrec/problem.hpp"

namespace optrec::io {

using Json = nlohmann::ordered_json;

struct SpecFile {
  ProblemSpec spec;
  std::optional<int> truncation;
  std::optional<int> grid_size;
  std::optional<double> tolerance;
};

/// Throws SpecError naming the offending key; unknown keys are rejected.
SpecFile parse_spec(const Json& doc);
Json to_json(const SpecFile& spec);

/// Reads and parses a file; JSON syntax errors are reported as SpecError
/// with field "json" and the byte position.
Json read_json(const std::string& path);
void write_json(const Json& doc, const std::string& path);

/// Number, or null for NaN and infinities.
Json number(double value);
/// Number, or "inf" for +infinity.
Json number_or_inf(double value);
double to_double(const Json& value, const std::string& field);

}  // namespace optrec::io
