#include "mobitok/embed.hpp"

#include <fstream>

#include <nlohmann/json.hpp>

#include "mobitok/blob.hpp"
#include "mobitok/error.hpp"

namespace mobitok {

using json = nlohmann::json;

EmbeddingTable::EmbeddingTable(std::vector<std::string> ids,
                               Eigen::MatrixXd vectors)
    : ids_(std::move(ids)), vectors_(std::move(vectors)) {
  if (static_cast<Eigen::Index>(ids_.size()) != vectors_.rows()) {
    throw DataError("[embed] id count does not match vector count");
  }
  if (!vectors_.allFinite()) {
    throw DataError("[embed] embedding table contains non-finite values");
  }
  for (Eigen::Index i = 0; i < vectors_.rows(); ++i) {
    if (!index_.emplace(ids_[static_cast<std::size_t>(i)], i).second) {
      throw DataError("[embed] duplicate location id '" +
                      ids_[static_cast<std::size_t>(i)] + "'");
    }
  }
}

bool EmbeddingTable::contains(const std::string& id) const {
  return index_.count(id) > 0;
}

Eigen::Index EmbeddingTable::row_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) {
    throw DataError("[embed] location missing from embedding table: '" + id +
                    "'");
  }
  return it->second;
}

Eigen::VectorXd EmbeddingTable::vector_for(const std::string& id) const {
  return vectors_.row(row_of(id)).transpose();
}

std::string embedding_blob_path(const std::string& manifest_path) {
  const auto dot = manifest_path.find_last_of('.');
  const auto slash = manifest_path.find_last_of("/\\");
  if (dot != std::string::npos &&
      (slash == std::string::npos || dot > slash)) {
    return manifest_path.substr(0, dot) + ".f32";
  }
  return manifest_path + ".f32";
}

EmbeddingTable load_embeddings(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw ConfigError("[embed] cannot open embedding manifest: " +
                      manifest_path);
  }
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError("[embed] invalid embedding manifest: " +
                    std::string(e.what()));
  }
  if (!manifest.contains("dim") || !manifest["dim"].is_number_integer() ||
      manifest["dim"].get<long>() <= 0) {
    throw DataError("[embed] embedding manifest field 'dim' missing or bad");
  }
  if (!manifest.contains("count") || !manifest["count"].is_number_integer() ||
      manifest["count"].get<long>() < 0) {
    throw DataError("[embed] embedding manifest field 'count' missing or bad");
  }
  if (!manifest.contains("ids") || !manifest["ids"].is_array()) {
    throw DataError("[embed] embedding manifest field 'ids' missing or bad");
  }
  const auto dim = manifest["dim"].get<Eigen::Index>();
  const auto count = manifest["count"].get<Eigen::Index>();
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(count));
  for (const auto& id : manifest["ids"]) ids.push_back(id.get<std::string>());
  if (static_cast<Eigen::Index>(ids.size()) != count) {
    throw DataError(
        "[embed] embedding manifest field 'count' disagrees with 'ids' (" +
        std::to_string(count) + " vs " + std::to_string(ids.size()) + ")");
  }
  const auto values =
      read_f32_blob(embedding_blob_path(manifest_path),
                    static_cast<std::size_t>(count * dim), "embeddings");
  Eigen::MatrixXd vectors(count, dim);
  for (Eigen::Index r = 0; r < count; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) {
      vectors(r, c) = values[static_cast<std::size_t>(r * dim + c)];
    }
  }
  return EmbeddingTable(std::move(ids), std::move(vectors));
}

void save_embeddings(const std::string& manifest_path,
                     const EmbeddingTable& table) {
  json manifest;
  manifest["format_version"] = 1;
  manifest["dim"] = table.dim();
  manifest["count"] = table.count();
  manifest["ids"] = table.ids();
  std::ofstream out(manifest_path);
  if (!out) {
    throw ConfigError("[embed] cannot write embedding manifest: " +
                      manifest_path);
  }
  out << manifest.dump(2) << "\n";
  std::vector<double> values(
      static_cast<std::size_t>(table.count() * table.dim()));
  for (Eigen::Index r = 0; r < table.count(); ++r) {
    for (Eigen::Index c = 0; c < table.dim(); ++c) {
      values[static_cast<std::size_t>(r * table.dim() + c)] =
          table.vectors()(r, c);
    }
  }
  write_f32_blob(embedding_blob_path(manifest_path), values);
}

namespace {

// FNV-1a, 64-bit, fixed offset so hashes never vary across builds.
std::uint64_t fnv1a64(const char* data, std::size_t len) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

Eigen::VectorXd hash_featurize(const std::string& text, int dim) {
  if (dim < 8) {
    throw ConfigError("[embed] hash featurizer dim must be >= 8, got " +
                      std::to_string(dim));
  }
  Eigen::VectorXd v = Eigen::VectorXd::Zero(dim);
  if (text.size() < 3) return v;
  for (std::size_t i = 0; i + 3 <= text.size(); ++i) {
    const std::uint64_t h = fnv1a64(text.data() + i, 3);
    const auto bucket = static_cast<Eigen::Index>(
        (h >> 8) % static_cast<std::uint64_t>(dim));
    const double sign = (h & 1u) ? 1.0 : -1.0;
    v[bucket] += sign;
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

}  // namespace mobitok
