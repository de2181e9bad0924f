#ifndef MOBITOK_TOKEN_INDEX_HPP
#define MOBITOK_TOKEN_INDEX_HPP

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mobitok {

// Location -> token sequence. Tokens are "<a_5>" style (level letter, code
// index); locations whose raw code sequences collide get an extra
// "<dup_j>" token so the map stays injective.
class TokenMap {
 public:
  TokenMap() = default;
  explicit TokenMap(std::map<std::string, std::vector<std::string>> entries);

  const std::vector<std::string>& tokens_for(const std::string& id) const;
  bool contains(const std::string& id) const;
  std::optional<std::string> location_for(
      const std::vector<std::string>& tokens) const;
  const std::map<std::string, std::vector<std::string>>& entries() const {
    return entries_;
  }
  std::size_t size() const { return entries_.size(); }

  // Sorted set of every token used by any location.
  std::vector<std::string> vocabulary() const;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
  std::map<std::vector<std::string>, std::string> reverse_;
};

std::string token_name(int level, int index);

// Names each location's raw indices and resolves collisions with dup
// tokens assigned in location-id order.
TokenMap assign_tokens(const std::map<std::string, std::vector<int>>& raw);

// Prefix tree over the map's token sequences; children iterate in token
// name order, leaves carry the location id.
class TokenTrie {
 public:
  struct Node {
    std::map<std::string, std::unique_ptr<Node>> children;
    std::optional<std::string> location_id;  // set iff leaf
  };

  static TokenTrie build(const TokenMap& map);

  struct Step {
    std::vector<std::string> next_tokens;     // empty at a leaf
    std::optional<std::string> location_id;   // set at a leaf
  };

  // Children of the node reached by `prefix` (the full token set for an
  // empty prefix); throws DataError when the prefix is not a valid path.
  Step allowed_next(const std::vector<std::string>& prefix) const;

  std::size_t leaf_count() const { return leaf_count_; }
  const Node& root() const { return *root_; }

 private:
  std::unique_ptr<Node> root_ = std::make_unique<Node>();
  std::size_t leaf_count_ = 0;
};

void save_token_map(const std::string& path, const TokenMap& map);
TokenMap load_token_map(const std::string& path);

}  // namespace mobitok

#endif  // MOBITOK_TOKEN_INDEX_HPP
