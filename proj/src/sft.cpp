#include "mobitok/sft.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mobitok/error.hpp"
#include "mobitok/timeutil.hpp"

namespace mobitok {

using json = nlohmann::json;

std::string to_string(SftTask task) {
  switch (task) {
    case SftTask::kNextPrediction: return "next_prediction";
    case SftTask::kRecovery: return "recovery";
    case SftTask::kTokenToText: return "token_to_text";
    case SftTask::kTextToToken: return "text_to_token";
  }
  throw DataError("[sft] unknown task tag");
}

SftTask sft_task_from_string(const std::string& name) {
  if (name == "next_prediction") return SftTask::kNextPrediction;
  if (name == "recovery") return SftTask::kRecovery;
  if (name == "token_to_text") return SftTask::kTokenToText;
  if (name == "text_to_token") return SftTask::kTextToToken;
  throw DataError("[sft] unknown task tag '" + name + "'");
}

SftTemplates SftTemplates::builtin(const std::string& version) {
  if (version != "v1") {
    throw ConfigError("[sft] unknown template version '" + version + "'");
  }
  SftTemplates t;
  t.version = "v1";
  t.next_prediction_instruction =
      "Given the user profile and the current trajectory of timestamped "
      "visits, predict the location the user will visit next. Answer with "
      "the location token sequence only.";
  t.recovery_instruction =
      "Some visits in the trajectory below have their location replaced by "
      "[MASK]. Recover the masked locations. Answer with one location token "
      "sequence per line, in trajectory order.";
  t.text_to_token_instruction =
      "Identify the location described below. Answer with its location "
      "token sequence only.";
  t.token_to_text_instruction =
      "Generate the full location description for the location with the "
      "following tokens.";
  return t;
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("[sft] cannot open template file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  // template files end with a newline; the instruction itself does not
  while (!text.empty() && (text.back() == '\n' || text.back() == '\r')) {
    text.pop_back();
  }
  return text;
}

}  // namespace

SftTemplates SftTemplates::load_dir(const std::string& templates_dir,
                                    const std::string& version) {
  const std::string base = templates_dir + "/" + version + "/";
  SftTemplates t;
  t.version = version;
  t.next_prediction_instruction = read_file(base + "next_prediction.txt");
  t.recovery_instruction = read_file(base + "recovery.txt");
  t.text_to_token_instruction = read_file(base + "text_to_token.txt");
  t.token_to_text_instruction = read_file(base + "token_to_text.txt");
  return t;
}

std::string join_token_sequence(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

UserProfile build_user_profile(const std::vector<Trajectory>& history,
                               const TokenMap& map,
                               const std::map<std::string, Location>& catalog,
                               std::size_t top_k,
                               int timezone_offset_minutes) {
  std::map<int, std::size_t> hour_counts;
  std::map<std::string, std::size_t> location_counts;  // by location id
  std::map<std::string, std::size_t> category_counts;
  for (const auto& traj : history) {
    for (const auto& rec : traj.records) {
      const std::int64_t local =
          rec.timestamp + static_cast<std::int64_t>(timezone_offset_minutes) * 60;
      hour_counts[civil_from_epoch(local).hour] += 1;
      location_counts[rec.location_id] += 1;
      auto cat = catalog.find(rec.location_id);
      if (cat == catalog.end()) {
        throw DataError("[sft] record references unknown location '" +
                        rec.location_id + "'");
      }
      category_counts[cat->second.category] += 1;
    }
  }

  auto top_entries = [top_k](const auto& counts, auto render_key) {
    std::vector<UserProfile::Entry> entries;
    for (const auto& [key, count] : counts) {
      entries.push_back({render_key(key), count});
    }
    // counts iterate in ascending key order, so a stable sort by frequency
    // leaves ties ordered by key
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) {
                       return a.frequency > b.frequency;
                     });
    if (entries.size() > top_k) entries.resize(top_k);
    return entries;
  };

  UserProfile profile;
  profile.top_hours = top_entries(hour_counts, [](int hour) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "%02d:00", hour);
    return std::string(buf);
  });
  profile.top_locations = top_entries(location_counts, [&](const std::string& id) {
    return join_token_sequence(map.tokens_for(id));
  });
  profile.top_categories =
      top_entries(category_counts, [](const std::string& c) { return c; });
  return profile;
}

namespace {

std::string render_entries(const std::vector<UserProfile::Entry>& entries) {
  if (entries.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i > 0) out += "; ";
    out += entries[i].key + " (x" + std::to_string(entries[i].frequency) + ")";
  }
  return out;
}

}  // namespace

std::string render_profile(const UserProfile& profile) {
  std::string out = "User profile:\n";
  out += "Most visited hours: " + render_entries(profile.top_hours) + "\n";
  out += "Most visited locations: " + render_entries(profile.top_locations) +
         "\n";
  out += "Most visited categories: " +
         render_entries(profile.top_categories) + "\n";
  return out;
}

std::optional<SftExample> make_next_prediction_example(
    const Trajectory& traj, const UserProfile& profile, const TokenMap& map,
    const SftTemplates& templates, int timezone_offset_minutes) {
  if (traj.records.size() < 2) return std::nullopt;
  SftExample ex;
  ex.task = SftTask::kNextPrediction;
  ex.instruction = templates.next_prediction_instruction;
  ex.user_id = traj.user_id;
  std::string input = render_profile(profile);
  input += "Current trajectory:\n";
  for (std::size_t i = 0; i + 1 < traj.records.size(); ++i) {
    const auto& rec = traj.records[i];
    input += format_prompt_time(rec.timestamp, timezone_offset_minutes) +
             ": " + join_token_sequence(map.tokens_for(rec.location_id)) +
             "\n";
  }
  ex.input = std::move(input);
  ex.output =
      join_token_sequence(map.tokens_for(traj.records.back().location_id));
  return ex;
}

std::vector<std::size_t> draw_mask_positions(std::size_t n, double ratio,
                                             Rng& rng) {
  if (!(ratio > 0.0) || !(ratio < 1.0)) {
    throw ConfigError("[sft] mask ratio must be inside (0, 1)");
  }
  auto m = static_cast<std::size_t>(
      std::lround(ratio * static_cast<double>(n)));
  if (m < 1) m = 1;
  if (m >= n) m = n - 1;  // never mask every position
  return rng.sample_indices(n, m);
}

std::optional<SftExample> make_recovery_example(
    const Trajectory& traj, double ratio, Rng& rng, const TokenMap& map,
    const SftTemplates& templates, int timezone_offset_minutes) {
  const std::size_t n = traj.records.size();
  if (n < 3) return std::nullopt;
  const std::vector<std::size_t> masked = draw_mask_positions(n, ratio, rng);
  std::set<std::size_t> masked_set(masked.begin(), masked.end());

  SftExample ex;
  ex.task = SftTask::kRecovery;
  ex.instruction = templates.recovery_instruction;
  ex.user_id = traj.user_id;
  ex.mask_positions = masked;
  std::string input = "Trajectory:\n";
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = traj.records[i];
    input += format_prompt_time(rec.timestamp, timezone_offset_minutes) + ": ";
    if (masked_set.count(i)) {
      input += "[MASK]";
    } else {
      input += join_token_sequence(map.tokens_for(rec.location_id));
    }
    input += "\n";
  }
  ex.input = std::move(input);
  std::string output;
  for (std::size_t i = 0; i < masked.size(); ++i) {
    if (i > 0) output.push_back('\n');
    output += join_token_sequence(
        map.tokens_for(traj.records[masked[i]].location_id));
  }
  ex.output = std::move(output);
  return ex;
}

std::pair<SftExample, SftExample> make_alignment_examples(
    const Location& loc, const std::string& description, const TokenMap& map,
    const SftTemplates& templates) {
  const std::string tokens = join_token_sequence(map.tokens_for(loc.id));
  SftExample text_to_token;
  text_to_token.task = SftTask::kTextToToken;
  text_to_token.instruction = templates.text_to_token_instruction;
  text_to_token.input = description;
  text_to_token.output = tokens;

  SftExample token_to_text;
  token_to_text.task = SftTask::kTokenToText;
  token_to_text.instruction = templates.token_to_text_instruction;
  token_to_text.input = tokens;
  token_to_text.output = description;
  return {std::move(text_to_token), std::move(token_to_text)};
}

SftDataset build_dataset(const DatasetSplit& splits, const TokenMap& map,
                         const std::map<std::string, UserProfile>& profiles,
                         const std::map<std::string, std::string>& descriptions,
                         const std::map<std::string, Location>& catalog,
                         const SftTemplates& templates, const SftConfig& cfg) {
  if (cfg.recovery_ratios.empty()) {
    throw ConfigError("[sft] recovery ratio set must be non-empty");
  }
  SftDataset dataset;
  dataset.seed = cfg.seed;
  dataset.template_version = templates.version;
  Rng rng(cfg.seed);
  const UserProfile empty_profile;

  for (const auto& [user, trajs] : splits.train) {
    auto pit = profiles.find(user);
    const UserProfile& profile =
        pit == profiles.end() ? empty_profile : pit->second;
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      auto ex = make_next_prediction_example(trajs[i], profile, map, templates,
                                             cfg.timezone_offset_minutes);
      if (ex) {
        ex->trajectory_index = static_cast<int>(i);
        dataset.examples.push_back(std::move(*ex));
      }
    }
  }
  for (const auto& [user, trajs] : splits.train) {
    for (std::size_t i = 0; i < trajs.size(); ++i) {
      const double ratio = cfg.recovery_ratios[static_cast<std::size_t>(
          rng.next_below(cfg.recovery_ratios.size()))];
      auto ex = make_recovery_example(trajs[i], ratio, rng, map, templates,
                                      cfg.timezone_offset_minutes);
      if (ex) {
        ex->trajectory_index = static_cast<int>(i);
        dataset.examples.push_back(std::move(*ex));
      }
    }
  }
  for (const auto& [id, description] : descriptions) {
    auto cit = catalog.find(id);
    if (cit == catalog.end()) {
      throw DataError("[sft] description for unknown location '" + id + "'");
    }
    auto [t2k, k2t] =
        make_alignment_examples(cit->second, description, map, templates);
    dataset.examples.push_back(std::move(t2k));
    dataset.examples.push_back(std::move(k2t));
  }

  rng.shuffle(dataset.examples);
  for (const auto& ex : dataset.examples) ++dataset.counts[to_string(ex.task)];
  return dataset;
}

void save_sft_jsonl(const std::string& path,
                    const std::vector<SftExample>& examples) {
  std::ofstream out(path);
  if (!out) throw ConfigError("[sft] cannot write dataset file: " + path);
  for (const auto& ex : examples) {
    json obj;
    obj["task"] = to_string(ex.task);
    obj["instruction"] = ex.instruction;
    obj["input"] = ex.input;
    obj["output"] = ex.output;
    obj["meta"] = {{"user_id", ex.user_id},
                   {"trajectory_index", ex.trajectory_index},
                   {"mask_positions", ex.mask_positions}};
    out << obj.dump() << "\n";
  }
}

std::vector<SftExample> load_sft_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("[sft] cannot open dataset file: " + path);
  std::vector<SftExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("[sft] dataset line " + std::to_string(line_no) + ": " +
                      e.what());
    }
    SftExample ex;
    ex.task = sft_task_from_string(obj.at("task").get<std::string>());
    ex.instruction = obj.at("instruction").get<std::string>();
    ex.input = obj.at("input").get<std::string>();
    ex.output = obj.at("output").get<std::string>();
    const auto& meta = obj.at("meta");
    ex.user_id = meta.at("user_id").get<std::string>();
    ex.trajectory_index = meta.at("trajectory_index").get<int>();
    ex.mask_positions =
        meta.at("mask_positions").get<std::vector<std::size_t>>();
    out.push_back(std::move(ex));
  }
  return out;
}

namespace {

const std::regex kTokenPattern("<[a-z]+_[0-9]+>");

std::set<std::string> extract_tokens(const std::string& text) {
  std::set<std::string> tokens;
  auto begin = std::sregex_iterator(text.begin(), text.end(), kTokenPattern);
  for (auto it = begin; it != std::sregex_iterator(); ++it) {
    tokens.insert(it->str());
  }
  return tokens;
}

}  // namespace

void validate_examples(const std::vector<SftExample>& examples,
                       const TokenMap& map) {
  const auto vocab_list = map.vocabulary();
  const std::set<std::string> vocab(vocab_list.begin(), vocab_list.end());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const std::string where = "[sft] example " + std::to_string(i);
    if (ex.output.empty()) throw DataError(where + ": empty output");
    if (ex.instruction.empty()) throw DataError(where + ": empty instruction");
    for (const std::string* field : {&ex.instruction, &ex.input, &ex.output}) {
      for (const auto& token : extract_tokens(*field)) {
        if (!vocab.count(token)) {
          throw DataError(where + ": token '" + token +
                          "' not in the token map");
        }
      }
    }
    if (ex.task == SftTask::kRecovery) {
      if (ex.mask_positions.empty()) {
        throw DataError(where + ": recovery example without mask positions");
      }
    }
  }
}

void check_no_leakage(const std::vector<SftExample>& examples,
                      const DatasetSplit& splits, const TokenMap& map) {
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    if (ex.task != SftTask::kNextPrediction && ex.task != SftTask::kRecovery) {
      continue;
    }
    const std::string where = "[sft] example " + std::to_string(i);
    auto uit = splits.train.find(ex.user_id);
    if (uit == splits.train.end()) {
      throw DataError(where + ": user '" + ex.user_id +
                      "' has no train trajectories");
    }
    if (ex.trajectory_index < 0 ||
        static_cast<std::size_t>(ex.trajectory_index) >= uit->second.size()) {
      throw DataError(where + ": trajectory index outside the train split");
    }
    const Trajectory& traj =
        uit->second[static_cast<std::size_t>(ex.trajectory_index)];
    if (ex.task == SftTask::kNextPrediction) {
      const auto expected =
          join_token_sequence(map.tokens_for(traj.records.back().location_id));
      if (ex.output != expected) {
        throw DataError(where + ": output does not match the train "
                        "trajectory's final location");
      }
    } else {
      const std::size_t n = traj.records.size();
      if (ex.mask_positions.empty() || ex.mask_positions.size() >= n) {
        throw DataError(where + ": mask count outside [1, n)");
      }
      std::string expected;
      for (std::size_t j = 0; j < ex.mask_positions.size(); ++j) {
        if (ex.mask_positions[j] >= n) {
          throw DataError(where + ": mask position out of range");
        }
        if (j > 0) expected.push_back('\n');
        expected += join_token_sequence(
            map.tokens_for(traj.records[ex.mask_positions[j]].location_id));
      }
      if (ex.output != expected) {
        throw DataError(where +
                        ": output does not match the masked locations");
      }
    }
  }
}

}  // namespace mobitok
