#ifndef MOBITOK_CONFIG_HPP
#define MOBITOK_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "mobitok/quantizer.hpp"
#include "mobitok/sft.hpp"

namespace mobitok {

// Minimal TOML reader covering the config surface this tool uses:
// [section] headers, key = value lines, strings, integers, floats,
// booleans, single-line scalar arrays, and # comments.
struct TomlValue {
  std::variant<std::string, std::int64_t, double, bool,
               std::vector<TomlValue>>
      data;

  std::string as_string(const std::string& field) const;
  std::int64_t as_integer(const std::string& field) const;
  double as_float(const std::string& field) const;
  bool as_bool(const std::string& field) const;
  const std::vector<TomlValue>& as_array(const std::string& field) const;
};

using TomlTable = std::map<std::string, std::map<std::string, TomlValue>>;

TomlTable parse_toml(std::istream& in, const std::string& origin);
TomlTable parse_toml_file(const std::string& path);
TomlValue parse_toml_scalar(const std::string& text);

// Applies one "section.key=value" override onto a parsed table.
void apply_override(TomlTable& table, const std::string& spec);

struct PipelineConfig {
  struct Paths {
    std::string checkins;
    std::string locations;
    std::string embeddings;  // external manifest; empty = pipeline-built
    std::string output_dir = "out";
    std::string templates_dir;  // empty = built-in templates
  } paths;

  struct Ingest {
    std::string format = "csv";
    std::size_t min_visits = 5;
    double gap_hours = 24.0;
    std::size_t min_len = 3;
    double f_train = 0.70;
    double f_val = 0.10;
    double f_test = 0.20;
  } ingest;

  struct Describe {
    double radius_km = 2.0;
    std::size_t k = 10;
    int geohash_precision = 12;
  } describe;

  struct Embed {
    int dim = 256;  // hashing featurizer output width
  } embed;

  QuantizerConfig quantizer;
  SftConfig sft;

  struct Decode {
    int order = 3;
    double smoothing_k = 0.1;
    int width = 15;
    int topn = 10;
  } decode;

  struct Eval {
    std::vector<std::size_t> ks = {1, 5, 10};
    std::vector<double> ratios = {0.2, 0.3, 0.4, 0.5};
    std::uint64_t seed = 42;
  } eval;

  struct Sweep {
    std::vector<int> k_values = {64, 128, 256, 512};
    std::vector<int> l_values = {2, 3, 4, 5};
  } sweep;

  void validate() const;  // numeric preconditions; throws ConfigError
};

// Loads the TOML file, applies --set overrides in order, then the
// MOBITOK_SEED environment variable (which overrides every seed).
PipelineConfig load_pipeline_config(const std::string& path,
                                    const std::vector<std::string>& overrides);

PipelineConfig pipeline_config_from_table(const TomlTable& table);

}  // namespace mobitok

#endif  // MOBITOK_CONFIG_HPP
