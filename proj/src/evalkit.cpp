#include "mobitok/evalkit.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mobitok/error.hpp"
#include "mobitok/rng.hpp"
#include "mobitok/sft.hpp"

namespace mobitok {

using json = nlohmann::json;

double hit_at_k(const std::vector<std::string>& ranked,
                const std::string& target, std::size_t k) {
  if (k < 1) throw ConfigError("[evalkit] k must be >= 1");
  const std::size_t limit = std::min(k, ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranked[i] == target) return 1.0;
  }
  return 0.0;
}

double ndcg_at_k(const std::vector<std::string>& ranked,
                 const std::string& target, std::size_t k) {
  if (k < 1) throw ConfigError("[evalkit] k must be >= 1");
  const std::size_t limit = std::min(k, ranked.size());
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranked[i] == target) {
      return 1.0 / std::log2(static_cast<double>(i) + 2.0);
    }
  }
  return 0.0;
}

void save_report_json(const std::string& path, const EvalReport& report) {
  json obj;
  obj["format_version"] = 1;
  obj["task"] = report.task;
  obj["metrics"] = report.metric_means;
  obj["instances"] = report.instance_count;
  obj["config"] = report.config_echo;
  obj["notes"] = report.notes;
  std::ofstream out(path);
  if (!out) throw ConfigError("[evalkit] cannot write report: " + path);
  out << obj.dump(2) << "\n";
}

void save_report_csv(const std::string& path, const EvalReport& report) {
  std::ofstream out(path);
  if (!out) throw ConfigError("[evalkit] cannot write report: " + path);
  out << "metric,value\n";
  for (const auto& [metric, value] : report.metric_means) {
    out << metric << "," << value << "\n";
  }
}

namespace {

struct MetricAccumulator {
  std::map<std::string, double> sums;
  std::size_t count = 0;

  void add(const std::vector<std::string>& ranked, const std::string& target,
           const std::vector<std::size_t>& ks) {
    for (std::size_t k : ks) {
      sums["hit@" + std::to_string(k)] += hit_at_k(ranked, target, k);
      sums["ndcg@" + std::to_string(k)] += ndcg_at_k(ranked, target, k);
    }
    ++count;
  }

  std::map<std::string, double> means() const {
    std::map<std::string, double> out;
    for (const auto& [metric, sum] : sums) {
      out[metric] = sum / static_cast<double>(count);
    }
    return out;
  }
};

std::vector<std::string> ranked_ids(const BeamResult& result) {
  std::vector<std::string> ids;
  ids.reserve(result.ranked.size());
  for (const auto& [id, _] : result.ranked) ids.push_back(id);
  return ids;
}

}  // namespace

EvalReport evaluate_next_location(const Scorer& scorer, const TokenTrie& trie,
                                  const TokenMap& map,
                                  const std::vector<Trajectory>& test,
                                  const std::vector<std::size_t>& ks,
                                  const BeamParams& beam) {
  if (test.empty()) {
    throw DataError("[evalkit] next-location evaluation needs a non-empty "
                    "test set");
  }
  MetricAccumulator acc;
  for (const auto& traj : test) {
    if (traj.records.size() < 2) continue;
    std::vector<MobilityRecord> context_records(traj.records.begin(),
                                                traj.records.end() - 1);
    std::vector<std::string> context = token_stream(context_records, map);
    context.push_back(kBoundaryToken);
    const BeamResult result =
        beam_search(scorer, context, trie, beam.width, beam.topn);
    acc.add(ranked_ids(result), traj.records.back().location_id, ks);
  }
  if (acc.count == 0) {
    throw DataError("[evalkit] no test trajectory admits a prediction "
                    "instance");
  }
  EvalReport report;
  report.task = "next_location";
  report.metric_means = acc.means();
  report.instance_count = acc.count;
  report.config_echo["beam_width"] = std::to_string(beam.width);
  report.config_echo["beam_topn"] = std::to_string(beam.topn);
  return report;
}

std::vector<std::pair<double, EvalReport>> evaluate_recovery(
    const Scorer& scorer, const TokenTrie& trie, const TokenMap& map,
    const std::vector<Trajectory>& test, const std::vector<double>& ratios,
    const std::vector<std::size_t>& ks, std::uint64_t seed,
    const BeamParams& beam) {
  if (test.empty()) {
    throw DataError("[evalkit] recovery evaluation needs a non-empty test "
                    "set");
  }
  std::vector<std::pair<double, EvalReport>> reports;
  for (std::size_t ri = 0; ri < ratios.size(); ++ri) {
    const double ratio = ratios[ri];
    Rng rng(seed + ri);
    MetricAccumulator acc;
    for (const auto& traj : test) {
      const std::size_t n = traj.records.size();
      if (n < 3) continue;
      const std::vector<std::size_t> masked =
          draw_mask_positions(n, ratio, rng);
      const std::set<std::size_t> masked_set(masked.begin(), masked.end());
      for (std::size_t slot : masked) {
        std::vector<MobilityRecord> visible;
        for (std::size_t i = 0; i < slot; ++i) {
          if (!masked_set.count(i)) visible.push_back(traj.records[i]);
        }
        std::vector<std::string> context = token_stream(visible, map);
        if (!visible.empty()) context.push_back(kBoundaryToken);
        const BeamResult result =
            beam_search(scorer, context, trie, beam.width, beam.topn);
        acc.add(ranked_ids(result), traj.records[slot].location_id, ks);
      }
    }
    if (acc.count == 0) {
      throw DataError("[evalkit] no test trajectory admits a recovery "
                      "instance");
    }
    EvalReport report;
    report.task = "recovery";
    report.metric_means = acc.means();
    report.instance_count = acc.count;
    report.config_echo["ratio"] = std::to_string(ratio);
    report.config_echo["seed"] = std::to_string(seed);
    report.config_echo["beam_width"] = std::to_string(beam.width);
    report.config_echo["beam_topn"] = std::to_string(beam.topn);
    report.notes.push_back(
        "causal baseline: each masked slot is scored from the visible "
        "records preceding it only");
    reports.emplace_back(ratio, std::move(report));
  }
  return reports;
}

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

ConsistencyReport consistency_study(const EmbeddingTable& zhat,
                                    const std::vector<Location>& locations,
                                    std::uint64_t seed,
                                    std::size_t group_size) {
  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    by_category[locations[i].category].push_back(i);
  }
  Rng rng(seed);
  ConsistencyReport report;
  double sum_a = 0.0, sum_b = 0.0, sum_c = 0.0, sum_d = 0.0;

  for (const auto& [category, members] : by_category) {
    if (members.size() < group_size + 1 ||
        locations.size() - members.size() < group_size) {
      report.skipped_categories.push_back(category);
      continue;
    }
    const std::size_t ref =
        members[static_cast<std::size_t>(rng.next_below(members.size()))];
    const Eigen::VectorXd ref_vec = zhat.vector_for(locations[ref].id);

    // others ordered by distance to the reference
    std::vector<std::pair<double, std::size_t>> by_distance;
    for (std::size_t j = 0; j < locations.size(); ++j) {
      if (j == ref) continue;
      by_distance.emplace_back(
          haversine_km(locations[ref].position, locations[j].position), j);
    }
    std::sort(by_distance.begin(), by_distance.end(),
              [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first < b.first;
                return locations[a.second].id < locations[b.second].id;
              });

    auto mean_cosine = [&](const std::vector<std::size_t>& group) {
      double sum = 0.0;
      for (std::size_t j : group) {
        sum += cosine_similarity(ref_vec, zhat.vector_for(locations[j].id));
      }
      return sum / static_cast<double>(group.size());
    };

    std::vector<std::size_t> near, far;
    for (std::size_t r = 0; r < group_size; ++r) {
      near.push_back(by_distance[r].second);
      far.push_back(by_distance[by_distance.size() - 1 - r].second);
    }

    std::vector<std::size_t> same_pool;
    for (std::size_t j : members) {
      if (j != ref) same_pool.push_back(j);
    }
    std::vector<std::size_t> diff_pool;
    for (std::size_t j = 0; j < locations.size(); ++j) {
      if (locations[j].category != category) diff_pool.push_back(j);
    }
    std::vector<std::size_t> same_group, diff_group;
    for (std::size_t idx : rng.sample_indices(same_pool.size(), group_size)) {
      same_group.push_back(same_pool[idx]);
    }
    for (std::size_t idx : rng.sample_indices(diff_pool.size(), group_size)) {
      diff_group.push_back(diff_pool[idx]);
    }

    sum_a += mean_cosine(near);
    sum_b += mean_cosine(far);
    sum_c += mean_cosine(same_group);
    sum_d += mean_cosine(diff_group);
    ++report.categories_used;
  }

  if (report.categories_used == 0) {
    throw DataError("[evalkit] consistency study: every category was too "
                    "small");
  }
  const auto n = static_cast<double>(report.categories_used);
  report.mean_near = sum_a / n;
  report.mean_far = sum_b / n;
  report.mean_same_cat = sum_c / n;
  report.mean_diff_cat = sum_d / n;
  return report;
}

void save_consistency_json(const std::string& path,
                           const ConsistencyReport& report) {
  json obj;
  obj["format_version"] = 1;
  obj["mean_cosine"] = {{"near", report.mean_near},
                        {"far", report.mean_far},
                        {"same_category", report.mean_same_cat},
                        {"different_category", report.mean_diff_cat}};
  obj["categories_used"] = report.categories_used;
  obj["skipped_categories"] = report.skipped_categories;
  std::ofstream out(path);
  if (!out) throw ConfigError("[evalkit] cannot write report: " + path);
  out << obj.dump(2) << "\n";
}

}  // namespace mobitok
