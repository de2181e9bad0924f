#ifndef MOBITOK_EVALKIT_HPP
#define MOBITOK_EVALKIT_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mobitok/decoder.hpp"
#include "mobitok/embed.hpp"
#include "mobitok/geo.hpp"
#include "mobitok/ingest.hpp"
#include "mobitok/token_index.hpp"

namespace mobitok {

// 1 iff target appears among the first k entries.
double hit_at_k(const std::vector<std::string>& ranked,
                const std::string& target, std::size_t k);

// Single relevant item: 1/log2(rank+1) when target ranks within k, else 0.
double ndcg_at_k(const std::vector<std::string>& ranked,
                 const std::string& target, std::size_t k);

struct EvalReport {
  std::string task;
  std::map<std::string, double> metric_means;  // "hit@5", "ndcg@5", ...
  std::size_t instance_count = 0;
  std::map<std::string, std::string> config_echo;
  std::vector<std::string> notes;
};

void save_report_json(const std::string& path, const EvalReport& report);
void save_report_csv(const std::string& path, const EvalReport& report);

struct BeamParams {
  int width = 15;
  int topn = 10;
};

// Per test trajectory: context records 1..n-1, target record n.
EvalReport evaluate_next_location(const Scorer& scorer, const TokenTrie& trie,
                                  const TokenMap& map,
                                  const std::vector<Trajectory>& test,
                                  const std::vector<std::size_t>& ks = {1, 5,
                                                                        10},
                                  const BeamParams& beam = {});

// Masked-slot imputation, one report per ratio. The n-gram baseline is
// causal, so each slot is scored from the visible records preceding it.
std::vector<std::pair<double, EvalReport>> evaluate_recovery(
    const Scorer& scorer, const TokenTrie& trie, const TokenMap& map,
    const std::vector<Trajectory>& test,
    const std::vector<double>& ratios = {0.2, 0.3, 0.4, 0.5},
    const std::vector<std::size_t>& ks = {1, 5, 10}, std::uint64_t seed = 42,
    const BeamParams& beam = {});

struct ConsistencyReport {
  double mean_near = 0.0;       // group A
  double mean_far = 0.0;        // group B
  double mean_same_cat = 0.0;   // group C
  double mean_diff_cat = 0.0;   // group D
  std::size_t categories_used = 0;
  std::vector<std::string> skipped_categories;
};

// Appendix-style representation consistency: per category, one seeded
// reference compared against nearby/distant/same-category/other-category
// groups by mean cosine of the quantized representations.
ConsistencyReport consistency_study(const EmbeddingTable& zhat,
                                    const std::vector<Location>& locations,
                                    std::uint64_t seed,
                                    std::size_t group_size = 10);

void save_consistency_json(const std::string& path,
                           const ConsistencyReport& report);

double cosine_similarity(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace mobitok

#endif  // MOBITOK_EVALKIT_HPP
