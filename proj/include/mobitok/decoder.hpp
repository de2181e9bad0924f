#ifndef MOBITOK_DECODER_HPP
#define MOBITOK_DECODER_HPP

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mobitok/ingest.hpp"
#include "mobitok/token_index.hpp"

namespace mobitok {

// Separates one location's tokens from the next in scoring streams.
inline constexpr const char* kBoundaryToken = "<sep>";

// A conditional token distribution over a fixed vocabulary; log
// probabilities must normalize over the vocabulary for every context.
class Scorer {
 public:
  virtual ~Scorer() = default;
  virtual double log_prob(const std::vector<std::string>& context,
                          const std::string& next) const = 0;
  virtual const std::vector<std::string>& vocabulary() const = 0;
};

// Add-k smoothed n-gram model over location token streams.
class NgramScorer : public Scorer {
 public:
  NgramScorer(int order, double k, std::vector<std::string> vocabulary);

  double log_prob(const std::vector<std::string>& context,
                  const std::string& next) const override;
  const std::vector<std::string>& vocabulary() const override {
    return vocab_;
  }

  int order() const { return order_; }
  double smoothing_k() const { return k_; }

  void save(const std::string& path) const;
  static NgramScorer load(const std::string& path);

  friend NgramScorer fit_ngram(
      const std::vector<std::vector<std::string>>& streams,
      std::vector<std::string> vocabulary, int order, double k);

 private:
  int order_;
  double k_;
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, std::int64_t> context_counts_;
  std::unordered_map<std::string, std::int64_t> gram_counts_;
};

// Tabulates n-gram counts for every context length up to order-1. The
// vocabulary should be all location tokens; the boundary marker is added
// when missing.
NgramScorer fit_ngram(const std::vector<std::vector<std::string>>& streams,
                      std::vector<std::string> vocabulary, int order = 3,
                      double k = 0.1);

// One trajectory's records rendered as a scoring stream: each location's
// tokens in order, boundary marker between locations.
std::vector<std::string> token_stream(
    const std::vector<MobilityRecord>& records, const TokenMap& map);

struct BeamResult {
  // (location_id, total log-probability), best first.
  std::vector<std::pair<std::string, double>> ranked;
};

// Beam search over trie paths; expansions are restricted to trie-valid
// continuations, so only real locations can be emitted.
BeamResult beam_search(const Scorer& scorer,
                       const std::vector<std::string>& context,
                       const TokenTrie& trie, int width = 15, int topn = 10);

}  // namespace mobitok

#endif  // MOBITOK_DECODER_HPP
