#include "mobitok/decoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mobitok/error.hpp"

namespace mobitok {

using json = nlohmann::json;

namespace {

std::string join_tokens(const std::vector<std::string>& tokens,
                        std::size_t begin, std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    if (i > begin) out.push_back(' ');
    out += tokens[i];
  }
  return out;
}

}  // namespace

NgramScorer::NgramScorer(int order, double k,
                         std::vector<std::string> vocabulary)
    : order_(order), k_(k), vocab_(std::move(vocabulary)) {
  if (order_ < 1) throw ConfigError("[decoder] n-gram order must be >= 1");
  if (k_ < 0.0) throw ConfigError("[decoder] smoothing k must be >= 0");
  if (std::find(vocab_.begin(), vocab_.end(), kBoundaryToken) ==
      vocab_.end()) {
    vocab_.push_back(kBoundaryToken);
  }
  std::sort(vocab_.begin(), vocab_.end());
  vocab_.erase(std::unique(vocab_.begin(), vocab_.end()), vocab_.end());
  if (vocab_.empty()) throw ConfigError("[decoder] empty vocabulary");
}

double NgramScorer::log_prob(const std::vector<std::string>& context,
                             const std::string& next) const {
  const std::size_t ctx_len = std::min(
      context.size(), static_cast<std::size_t>(order_ - 1));
  const std::string ctx =
      join_tokens(context, context.size() - ctx_len, context.size());
  const std::string gram = ctx.empty() ? next : ctx + " " + next;
  double num = k_;
  double den = k_ * static_cast<double>(vocab_.size());
  if (auto it = gram_counts_.find(gram); it != gram_counts_.end()) {
    num += static_cast<double>(it->second);
  }
  if (auto it = context_counts_.find(ctx); it != context_counts_.end()) {
    den += static_cast<double>(it->second);
  }
  if (den == 0.0) {
    // k = 0 and an unseen context: fall back to the uniform limit.
    return -std::log(static_cast<double>(vocab_.size()));
  }
  return std::log(num) - std::log(den);
}

NgramScorer fit_ngram(const std::vector<std::vector<std::string>>& streams,
                      std::vector<std::string> vocabulary, int order,
                      double k) {
  bool any = false;
  for (const auto& s : streams) any = any || !s.empty();
  if (!any) {
    throw DataError("[decoder] cannot fit n-gram scorer on empty data");
  }
  NgramScorer scorer(order, k, std::move(vocabulary));
  for (const auto& stream : streams) {
    for (std::size_t i = 0; i < stream.size(); ++i) {
      const auto max_ctx = std::min(
          static_cast<std::size_t>(order - 1), i);
      for (std::size_t c = 0; c <= max_ctx; ++c) {
        const std::string ctx = join_tokens(stream, i - c, i);
        const std::string gram =
            ctx.empty() ? stream[i] : ctx + " " + stream[i];
        ++scorer.gram_counts_[gram];
        ++scorer.context_counts_[ctx];
      }
    }
  }
  return scorer;
}

void NgramScorer::save(const std::string& path) const {
  json obj;
  obj["format_version"] = 1;
  obj["order"] = order_;
  obj["k"] = k_;
  obj["vocabulary"] = vocab_;
  json ctx = json::object();
  for (const auto& [key, count] : context_counts_) ctx[key] = count;
  json grams = json::object();
  for (const auto& [key, count] : gram_counts_) grams[key] = count;
  obj["context_counts"] = std::move(ctx);
  obj["gram_counts"] = std::move(grams);
  std::ofstream out(path);
  if (!out) throw ConfigError("[decoder] cannot write scorer file: " + path);
  out << obj.dump(2) << "\n";
}

NgramScorer NgramScorer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("[decoder] cannot open scorer file: " + path);
  json obj;
  try {
    in >> obj;
  } catch (const json::exception& e) {
    throw DataError("[decoder] invalid scorer JSON: " + std::string(e.what()));
  }
  NgramScorer scorer(obj.at("order").get<int>(), obj.at("k").get<double>(),
                     obj.at("vocabulary").get<std::vector<std::string>>());
  for (const auto& [key, count] : obj.at("context_counts").items()) {
    scorer.context_counts_[key] = count.get<std::int64_t>();
  }
  for (const auto& [key, count] : obj.at("gram_counts").items()) {
    scorer.gram_counts_[key] = count.get<std::int64_t>();
  }
  return scorer;
}

std::vector<std::string> token_stream(
    const std::vector<MobilityRecord>& records, const TokenMap& map) {
  std::vector<std::string> stream;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (i > 0) stream.push_back(kBoundaryToken);
    const auto& tokens = map.tokens_for(records[i].location_id);
    stream.insert(stream.end(), tokens.begin(), tokens.end());
  }
  return stream;
}

BeamResult beam_search(const Scorer& scorer,
                       const std::vector<std::string>& context,
                       const TokenTrie& trie, int width, int topn) {
  if (width < 1) throw ConfigError("[decoder] beam width must be >= 1");
  if (topn < 1) throw ConfigError("[decoder] beam topn must be >= 1");

  struct Hypothesis {
    std::vector<std::string> generated;
    double score = 0.0;
  };

  std::vector<Hypothesis> partials{{{}, 0.0}};
  std::vector<std::pair<std::string, double>> completed;

  while (!partials.empty()) {
    std::vector<Hypothesis> candidates;
    for (const auto& hyp : partials) {
      const TokenTrie::Step step = trie.allowed_next(hyp.generated);
      for (const auto& token : step.next_tokens) {
        std::vector<std::string> scoring_context = context;
        scoring_context.insert(scoring_context.end(), hyp.generated.begin(),
                               hyp.generated.end());
        Hypothesis next;
        next.generated = hyp.generated;
        next.generated.push_back(token);
        next.score = hyp.score + scorer.log_prob(scoring_context, token);
        const TokenTrie::Step child = trie.allowed_next(next.generated);
        if (child.location_id) {
          completed.emplace_back(*child.location_id, next.score);
        } else {
          candidates.push_back(std::move(next));
        }
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Hypothesis& a, const Hypothesis& b) {
                if (a.score != b.score) return a.score > b.score;
                return a.generated < b.generated;
              });
    if (static_cast<int>(candidates.size()) > width) {
      candidates.resize(static_cast<std::size_t>(width));
    }
    partials = std::move(candidates);
  }

  std::sort(completed.begin(), completed.end(),
            [](const auto& a, const auto& b) {
              if (a.second != b.second) return a.second > b.second;
              return a.first < b.first;
            });
  if (static_cast<int>(completed.size()) > topn) {
    completed.resize(static_cast<std::size_t>(topn));
  }
  return BeamResult{std::move(completed)};
}

}  // namespace mobitok
