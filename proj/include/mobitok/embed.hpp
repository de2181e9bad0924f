#ifndef MOBITOK_EMBED_HPP
#define MOBITOK_EMBED_HPP

#include <Eigen/Dense>
#include <string>
#include <unordered_map>
#include <vector>

namespace mobitok {

// Initial location representations, one row per location in manifest order.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(std::vector<std::string> ids, Eigen::MatrixXd vectors);

  Eigen::Index dim() const { return vectors_.cols(); }
  Eigen::Index count() const { return vectors_.rows(); }
  const std::vector<std::string>& ids() const { return ids_; }
  const Eigen::MatrixXd& vectors() const { return vectors_; }

  bool contains(const std::string& id) const;
  // Row for a location; throws DataError naming the id when absent.
  Eigen::VectorXd vector_for(const std::string& id) const;
  Eigen::Index row_of(const std::string& id) const;

 private:
  std::vector<std::string> ids_;
  Eigen::MatrixXd vectors_;
  std::unordered_map<std::string, Eigen::Index> index_;
};

// Manifest: JSON {dim, count, ids}; vectors live in a sibling blob of
// count*dim little-endian float32 values, row-major in manifest id order.
// The blob path is the manifest path with its extension replaced by ".f32".
EmbeddingTable load_embeddings(const std::string& manifest_path);
void save_embeddings(const std::string& manifest_path,
                     const EmbeddingTable& table);

std::string embedding_blob_path(const std::string& manifest_path);

// Character-trigram hashing featurizer: trigram counts hashed into dim
// buckets with a sign bit, then L2-normalized. Deterministic fallback for
// pipelines without precomputed language-model embeddings.
Eigen::VectorXd hash_featurize(const std::string& text, int dim = 256);

}  // namespace mobitok

#endif  // MOBITOK_EMBED_HPP
