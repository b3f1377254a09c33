#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "kernelrn/ensembles.hpp"
#include "kernelrn/kernel.hpp"
#include "kernelrn/rn.hpp"
#include "kernelrn/vn.hpp"

namespace kernelrn {

/// Every problem found while reading a config, each prefixed by its field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const noexcept { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct YSpec {
  enum class Kind { identity, block_projection, diagonal, matrix };
  Kind kind = Kind::identity;
  std::size_t block = 0;  // 1-based, block_projection
  std::vector<double> values;  // diagonal
  ComplexMatrix matrix;        // matrix
};

struct VnConfig {
  NcPolynomial polynomial{1};
  nlohmann::ordered_json polynomial_json;
  YSpec y;
  nlohmann::ordered_json y_json;
  std::optional<std::size_t> depth;
  std::optional<ComplexVector> vector;
};

struct AnalysisConfig {
  std::size_t max_order = 3;
  SubalgebraSpec subalgebra = SubalgebraSpec::full();
  Enforcement enforce = Enforcement::none;
  double z = 3.0;
  RnTolerances tolerances;
  bool d_sequence = true;
};

struct OutputConfig {
  std::filesystem::path directory = "kernelrn_out";
  bool json = true;
  bool csv = true;
};

struct RunConfig {
  EnsembleSpec ensemble;
  nlohmann::ordered_json ensemble_json;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
  unsigned workers = 0;  // 0: all hardware threads
  AnalysisConfig analysis;
  std::optional<VnConfig> vn;
  OutputConfig output;
};

/// Parses and checks a config document. Unknown keys are rejected.
RunConfig parse_config(const nlohmann::json& doc);

/// Reads `path` and parses it; I/O and syntax problems are reported as ConfigError.
RunConfig load_config(const std::filesystem::path& path);

/// Resolved config with every default filled in. Worker count and output
/// location are left out so that reports do not depend on them.
nlohmann::ordered_json config_to_json(const RunConfig& cfg);

/// Builds the Y matrix of a vn section for dimension n under subalgebra b.
ComplexMatrix build_y(const YSpec& y, std::size_t n, const SubalgebraSpec& b);

/// Normalization parameter of the ensemble's large-N limits, when it has one.
std::optional<double> ensemble_tau(const EnsembleSpec& spec);

}  // namespace kernelrn
