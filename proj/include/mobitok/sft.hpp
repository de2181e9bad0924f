#ifndef MOBITOK_SFT_HPP
#define MOBITOK_SFT_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mobitok/geo.hpp"
#include "mobitok/ingest.hpp"
#include "mobitok/rng.hpp"
#include "mobitok/token_index.hpp"

namespace mobitok {

enum class SftTask { kNextPrediction, kRecovery, kTokenToText, kTextToToken };

std::string to_string(SftTask task);
SftTask sft_task_from_string(const std::string& name);

struct SftExample {
  SftTask task = SftTask::kNextPrediction;
  std::string instruction;
  std::string input;
  std::string output;
  // meta
  std::string user_id;
  int trajectory_index = -1;
  std::vector<std::size_t> mask_positions;
};

// Frequency summaries of one user's training history.
struct UserProfile {
  struct Entry {
    std::string key;
    std::size_t frequency = 0;
  };
  std::vector<Entry> top_hours;       // "09:00" style keys
  std::vector<Entry> top_locations;   // token sequences
  std::vector<Entry> top_categories;  // category names
};

// Prompt wording, versioned so goldens survive prose tweaks. The same
// texts ship as plain files under templates/<version>/.
struct SftTemplates {
  std::string version;
  std::string next_prediction_instruction;
  std::string recovery_instruction;
  std::string text_to_token_instruction;
  std::string token_to_text_instruction;

  static SftTemplates builtin(const std::string& version);
  static SftTemplates load_dir(const std::string& templates_dir,
                               const std::string& version);
};

struct SftConfig {
  std::vector<double> recovery_ratios = {0.2, 0.3, 0.4, 0.5};
  std::string template_version = "v1";
  std::uint64_t seed = 42;
  int timezone_offset_minutes = 0;
};

UserProfile build_user_profile(const std::vector<Trajectory>& history,
                               const TokenMap& map,
                               const std::map<std::string, Location>& catalog,
                               std::size_t top_k = 5,
                               int timezone_offset_minutes = 0);

std::string render_profile(const UserProfile& profile);

std::string join_token_sequence(const std::vector<std::string>& tokens);

// Empty result signals a skip (trajectory too short).
std::optional<SftExample> make_next_prediction_example(
    const Trajectory& traj, const UserProfile& profile, const TokenMap& map,
    const SftTemplates& templates, int timezone_offset_minutes = 0);

// m = max(1, round(ratio*n)) positions, never all of them, sorted.
std::vector<std::size_t> draw_mask_positions(std::size_t n, double ratio,
                                             Rng& rng);

std::optional<SftExample> make_recovery_example(
    const Trajectory& traj, double ratio, Rng& rng, const TokenMap& map,
    const SftTemplates& templates, int timezone_offset_minutes = 0);

// (text_to_token, token_to_text) with mirrored input/output.
std::pair<SftExample, SftExample> make_alignment_examples(
    const Location& loc, const std::string& description, const TokenMap& map,
    const SftTemplates& templates);

struct SftDataset {
  std::vector<SftExample> examples;
  std::map<std::string, std::size_t> counts;  // per task tag
  std::uint64_t seed = 0;
  std::string template_version;
};

SftDataset build_dataset(const DatasetSplit& splits, const TokenMap& map,
                         const std::map<std::string, UserProfile>& profiles,
                         const std::map<std::string, std::string>& descriptions,
                         const std::map<std::string, Location>& catalog,
                         const SftTemplates& templates, const SftConfig& cfg);

void save_sft_jsonl(const std::string& path,
                    const std::vector<SftExample>& examples);
std::vector<SftExample> load_sft_jsonl(const std::string& path);

// Parse-and-check pass: type invariants plus token-vocabulary membership.
void validate_examples(const std::vector<SftExample>& examples,
                       const TokenMap& map);

// Verifies every mobility example resolves to a train trajectory and that
// its output matches that trajectory's tokens (identity-based leakage
// check). Throws DataError on violation.
void check_no_leakage(const std::vector<SftExample>& examples,
                      const DatasetSplit& splits, const TokenMap& map);

}  // namespace mobitok

#endif  // MOBITOK_SFT_HPP
