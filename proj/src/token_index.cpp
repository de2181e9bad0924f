#include "mobitok/token_index.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "mobitok/error.hpp"

namespace mobitok {

using json = nlohmann::json;

TokenMap::TokenMap(std::map<std::string, std::vector<std::string>> entries)
    : entries_(std::move(entries)) {
  for (const auto& [id, tokens] : entries_) {
    if (!reverse_.emplace(tokens, id).second) {
      throw DataError("[token_index] token map is not injective at '" + id +
                      "'");
    }
  }
}

const std::vector<std::string>& TokenMap::tokens_for(
    const std::string& id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) {
    throw DataError("[token_index] no tokens for location '" + id + "'");
  }
  return it->second;
}

bool TokenMap::contains(const std::string& id) const {
  return entries_.count(id) > 0;
}

std::optional<std::string> TokenMap::location_for(
    const std::vector<std::string>& tokens) const {
  auto it = reverse_.find(tokens);
  if (it == reverse_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> TokenMap::vocabulary() const {
  std::set<std::string> vocab;
  for (const auto& [_, tokens] : entries_) {
    vocab.insert(tokens.begin(), tokens.end());
  }
  return {vocab.begin(), vocab.end()};
}

std::string token_name(int level, int index) {
  if (level < 0 || level >= 26) {
    throw ConfigError("[token_index] token levels beyond 26 not supported");
  }
  return std::string("<") + static_cast<char>('a' + level) + "_" +
         std::to_string(index) + ">";
}

TokenMap assign_tokens(const std::map<std::string, std::vector<int>>& raw) {
  if (raw.empty()) return TokenMap();
  const std::size_t levels = raw.begin()->second.size();
  if (levels > 26) {
    throw ConfigError("[token_index] token levels beyond 26 not supported");
  }
  // Group ids by their full raw sequence; std::map keeps groups and ids in
  // deterministic order, so dup numbering follows location-id order.
  std::map<std::vector<int>, std::vector<std::string>> groups;
  for (const auto& [id, codes] : raw) {
    if (codes.size() != levels) {
      throw DataError("[token_index] raw sequence length mismatch at '" + id +
                      "'");
    }
    groups[codes].push_back(id);
  }
  std::map<std::string, std::vector<std::string>> entries;
  for (const auto& [codes, ids] : groups) {
    std::vector<std::string> base;
    base.reserve(codes.size());
    for (std::size_t l = 0; l < codes.size(); ++l) {
      base.push_back(token_name(static_cast<int>(l), codes[l]));
    }
    if (ids.size() == 1) {
      entries[ids.front()] = base;
    } else {
      for (std::size_t j = 0; j < ids.size(); ++j) {
        auto tokens = base;
        tokens.push_back("<dup_" + std::to_string(j) + ">");
        entries[ids[j]] = std::move(tokens);
      }
    }
  }
  return TokenMap(std::move(entries));
}

TokenTrie TokenTrie::build(const TokenMap& map) {
  TokenTrie trie;
  for (const auto& [id, tokens] : map.entries()) {
    Node* node = trie.root_.get();
    for (const auto& token : tokens) {
      if (node->location_id) {
        // A leaf on the path of another sequence; the dup rule makes this
        // unreachable for maps produced by assign_tokens.
        throw DataError(
            "[token_index] prefix-freeness violated below location '" +
            *node->location_id + "'");
      }
      auto& child = node->children[token];
      if (!child) child = std::make_unique<Node>();
      node = child.get();
    }
    if (!node->children.empty() || node->location_id) {
      throw DataError("[token_index] prefix-freeness violated at '" + id +
                      "'");
    }
    node->location_id = id;
    ++trie.leaf_count_;
  }
  return trie;
}

TokenTrie::Step TokenTrie::allowed_next(
    const std::vector<std::string>& prefix) const {
  const Node* node = root_.get();
  for (const auto& token : prefix) {
    auto it = node->children.find(token);
    if (it == node->children.end()) {
      throw DataError("[token_index] invalid prefix at token '" + token + "'");
    }
    node = it->second.get();
  }
  Step step;
  if (node->location_id) {
    step.location_id = node->location_id;
    return step;
  }
  step.next_tokens.reserve(node->children.size());
  for (const auto& [token, _] : node->children) {
    step.next_tokens.push_back(token);
  }
  return step;
}

void save_token_map(const std::string& path, const TokenMap& map) {
  json obj = json::object();
  for (const auto& [id, tokens] : map.entries()) obj[id] = tokens;
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("[token_index] cannot write token map: " + path);
  }
  out << obj.dump(2) << "\n";
}

TokenMap load_token_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("[token_index] cannot open token map: " + path);
  json obj;
  try {
    in >> obj;
  } catch (const json::exception& e) {
    throw DataError("[token_index] invalid token map JSON: " +
                    std::string(e.what()));
  }
  std::map<std::string, std::vector<std::string>> entries;
  for (const auto& [id, tokens] : obj.items()) {
    entries[id] = tokens.get<std::vector<std::string>>();
  }
  return TokenMap(std::move(entries));
}

}  // namespace mobitok
