#include "mobitok/quantizer.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "mobitok/blob.hpp"
#include "mobitok/error.hpp"
#include "mobitok/rng.hpp"

namespace mobitok {

using json = nlohmann::json;

CodebookInit codebook_init_from_string(const std::string& name) {
  if (name == "kmeans") return CodebookInit::kKmeans;
  if (name == "random") return CodebookInit::kRandom;
  throw ConfigError("[quantizer] unknown codebook_init '" + name + "'");
}

std::string to_string(CodebookInit init) {
  return init == CodebookInit::kKmeans ? "kmeans" : "random";
}

void QuantizerConfig::validate() const {
  if (levels < 1 || levels > 26) {
    throw ConfigError("[quantizer] levels must be in [1, 26]");
  }
  if (codebook_size < 1) {
    throw ConfigError("[quantizer] codebook_size must be >= 1");
  }
  if (code_dim < 1) throw ConfigError("[quantizer] code_dim must be >= 1");
  if (!(alpha > 0.0)) throw ConfigError("[quantizer] alpha must be > 0");
  if (!(learning_rate > 0.0)) {
    throw ConfigError("[quantizer] learning_rate must be > 0");
  }
  if (batch_size < 1) throw ConfigError("[quantizer] batch_size must be >= 1");
  if (epochs < 0) throw ConfigError("[quantizer] epochs must be >= 0");
  for (int h : encoder_hidden) {
    if (h < 1) throw ConfigError("[quantizer] hidden widths must be >= 1");
  }
}

// ---------------------------------------------------------------------------
// MLP primitives

namespace {

struct MlpCache {
  std::vector<Eigen::VectorXd> inputs;   // input to each layer
  std::vector<Eigen::VectorXd> preacts;  // W x + b per layer
};

Eigen::VectorXd mlp_forward_cached(const Mlp& mlp, const Eigen::VectorXd& x,
                                   MlpCache& cache) {
  cache.inputs.clear();
  cache.preacts.clear();
  Eigen::VectorXd a = x;
  for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
    cache.inputs.push_back(a);
    Eigen::VectorXd z = mlp.layers[k].weight * a + mlp.layers[k].bias;
    cache.preacts.push_back(z);
    if (k + 1 < mlp.layers.size()) {
      a = z.cwiseMax(0.0);
    } else {
      a = std::move(z);
    }
  }
  return a;
}

// Accumulates parameter gradients into `grads`, returns gradient w.r.t. the
// MLP input.
Eigen::VectorXd mlp_backward(const Mlp& mlp, const MlpCache& cache,
                             const Eigen::VectorXd& g_out, Mlp& grads) {
  Eigen::VectorXd g = g_out;
  for (std::size_t k = mlp.layers.size(); k-- > 0;) {
    if (k + 1 < mlp.layers.size()) {
      // through the ReLU that followed this layer
      for (Eigen::Index i = 0; i < g.size(); ++i) {
        if (cache.preacts[k][i] <= 0.0) g[i] = 0.0;
      }
    }
    grads.layers[k].weight.noalias() += g * cache.inputs[k].transpose();
    grads.layers[k].bias += g;
    g = mlp.layers[k].weight.transpose() * g;
  }
  return g;
}

Mlp zero_like(const Mlp& mlp) {
  Mlp out;
  for (const auto& layer : mlp.layers) {
    out.layers.push_back(
        {Eigen::MatrixXd::Zero(layer.weight.rows(), layer.weight.cols()),
         Eigen::VectorXd::Zero(layer.bias.size())});
  }
  return out;
}

}  // namespace

Eigen::VectorXd mlp_forward(const Mlp& mlp, const Eigen::VectorXd& x) {
  MlpCache cache;
  return mlp_forward_cached(mlp, x, cache);
}

Eigen::VectorXd mlp_input_gradient(const Mlp& mlp, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& g_out) {
  MlpCache cache;
  mlp_forward_cached(mlp, x, cache);
  Mlp scratch = zero_like(mlp);
  return mlp_backward(mlp, cache, g_out, scratch);
}

// ---------------------------------------------------------------------------
// Quantization

QuantizeResult quantize(const Eigen::VectorXd& r0,
                        const std::vector<Eigen::MatrixXd>& codebooks) {
  QuantizeResult result;
  result.residuals.push_back(r0);
  result.zhat = Eigen::VectorXd::Zero(r0.size());
  Eigen::VectorXd r = r0;
  for (const auto& codebook : codebooks) {
    if (codebook.cols() != r.size()) {
      throw DataError("[quantizer] residual length does not match code_dim");
    }
    int best = 0;
    double best_dist = (r - codebook.row(0).transpose()).squaredNorm();
    for (Eigen::Index i = 1; i < codebook.rows(); ++i) {
      const double dist = (r - codebook.row(i).transpose()).squaredNorm();
      if (dist < best_dist) {
        best = static_cast<int>(i);
        best_dist = dist;
      }
    }
    result.indices.push_back(best);
    const Eigen::VectorXd chosen = codebook.row(best).transpose();
    r -= chosen;
    result.zhat += chosen;
    result.residuals.push_back(r);
  }
  return result;
}

LossBreakdown losses(const Eigen::VectorXd& s, const RqVaeModel& model,
                     double alpha) {
  const Eigen::VectorXd z_e = mlp_forward(model.encoder, s);
  const QuantizeResult q = quantize(z_e, model.codebooks);
  const Eigen::VectorXd s_hat = mlp_forward(model.decoder, q.zhat);
  LossBreakdown out;
  out.rec = (s - s_hat).squaredNorm();
  // Each level contributes ||r_{l-1} - v_{c_l}||^2 = ||r_l||^2 from the
  // codebook term and alpha times the same quantity from the commitment
  // term; the two differ only in where gradients flow.
  for (std::size_t l = 1; l < q.residuals.size(); ++l) {
    out.rq += (1.0 + alpha) * q.residuals[l].squaredNorm();
  }
  out.total = out.rec + out.rq;
  return out;
}

ModelGrads zero_grads_like(const RqVaeModel& model) {
  ModelGrads grads;
  grads.encoder = zero_like(model.encoder);
  grads.decoder = zero_like(model.decoder);
  for (const auto& codebook : model.codebooks) {
    grads.codebooks.push_back(
        Eigen::MatrixXd::Zero(codebook.rows(), codebook.cols()));
  }
  return grads;
}

ExampleGradients example_gradients(const RqVaeModel& model,
                                   const Eigen::VectorXd& s, double alpha) {
  ExampleGradients out;
  out.grads = zero_grads_like(model);

  MlpCache enc_cache;
  out.encoder_out = mlp_forward_cached(model.encoder, s, enc_cache);
  out.quant = quantize(out.encoder_out, model.codebooks);

  MlpCache dec_cache;
  const Eigen::VectorXd s_hat =
      mlp_forward_cached(model.decoder, out.quant.zhat, dec_cache);

  out.loss.rec = (s - s_hat).squaredNorm();
  for (std::size_t l = 1; l < out.quant.residuals.size(); ++l) {
    out.loss.rq += (1.0 + alpha) * out.quant.residuals[l].squaredNorm();
  }
  out.loss.total = out.loss.rec + out.loss.rq;

  // Reconstruction: backprop through the decoder, then hand the gradient at
  // zhat to the encoder output unchanged (argmin treated as identity).
  const Eigen::VectorXd g_shat = 2.0 * (s_hat - s);
  out.encoder_out_grad_rec =
      mlp_backward(model.decoder, dec_cache, g_shat, out.grads.decoder);

  // Codebooks: only the sg[r]-vs-codevector term contributes.
  // d/dv ||r_{l-1} - v||^2 = -2 (r_{l-1} - v) = -2 r_l.
  for (int l = 0; l < model.levels(); ++l) {
    out.grads.codebooks[static_cast<std::size_t>(l)].row(
        out.quant.indices[static_cast<std::size_t>(l)]) -=
        2.0 * out.quant.residuals[static_cast<std::size_t>(l) + 1].transpose();
  }

  // Commitment: residuals reach the encoder output with unit Jacobian since
  // the subtracted codevectors are stop-gradients.
  out.encoder_out_grad_commit = Eigen::VectorXd::Zero(out.encoder_out.size());
  for (std::size_t l = 1; l < out.quant.residuals.size(); ++l) {
    out.encoder_out_grad_commit += 2.0 * alpha * out.quant.residuals[l];
  }

  const Eigen::VectorXd g_ze =
      out.encoder_out_grad_rec + out.encoder_out_grad_commit;
  mlp_backward(model.encoder, enc_cache, g_ze, out.grads.encoder);
  return out;
}

namespace {

void add_scaled(Mlp& acc, const Mlp& g, double scale) {
  for (std::size_t k = 0; k < acc.layers.size(); ++k) {
    acc.layers[k].weight += scale * g.layers[k].weight;
    acc.layers[k].bias += scale * g.layers[k].bias;
  }
}

}  // namespace

BatchGradients batch_gradients(const RqVaeModel& model,
                               const Eigen::MatrixXd& batch, double alpha) {
  if (batch.rows() == 0) {
    throw DataError("[quantizer] empty batch");
  }
  BatchGradients out;
  out.grads = zero_grads_like(model);
  out.encoder_outputs.resize(batch.rows(), model.code_dim());
  const double inv_n = 1.0 / static_cast<double>(batch.rows());
  for (Eigen::Index i = 0; i < batch.rows(); ++i) {
    const ExampleGradients eg =
        example_gradients(model, batch.row(i).transpose(), alpha);
    add_scaled(out.grads.encoder, eg.grads.encoder, inv_n);
    add_scaled(out.grads.decoder, eg.grads.decoder, inv_n);
    for (std::size_t l = 0; l < out.grads.codebooks.size(); ++l) {
      out.grads.codebooks[l] += inv_n * eg.grads.codebooks[l];
    }
    out.mean_loss.rec += inv_n * eg.loss.rec;
    out.mean_loss.rq += inv_n * eg.loss.rq;
    out.encoder_outputs.row(i) = eg.encoder_out.transpose();
    out.indices.push_back(eg.quant.indices);
  }
  out.mean_loss.total = out.mean_loss.rec + out.mean_loss.rq;
  return out;
}

// ---------------------------------------------------------------------------
// AdamW

namespace {

template <typename Tensor>
void adamw_update_tensor(Tensor& param, const Tensor& grad, Tensor& m,
                         Tensor& v, const AdamWState& st, double lr,
                         double bias1, double bias2) {
  m.array() = st.beta1 * m.array() + (1.0 - st.beta1) * grad.array();
  v.array() = st.beta2 * v.array() + (1.0 - st.beta2) * grad.array().square();
  param.array() *= (1.0 - lr * st.weight_decay);
  param.array() -=
      lr * (m.array() / bias1) / ((v.array() / bias2).sqrt() + st.eps);
}

void adamw_apply(RqVaeModel& model, const ModelGrads& grads, AdamWState& st,
                 double lr) {
  ++st.step;
  const double bias1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bias2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  auto update_mlp = [&](Mlp& mlp, const Mlp& g, Mlp& m, Mlp& v) {
    for (std::size_t k = 0; k < mlp.layers.size(); ++k) {
      adamw_update_tensor(mlp.layers[k].weight, g.layers[k].weight,
                          m.layers[k].weight, v.layers[k].weight, st, lr,
                          bias1, bias2);
      adamw_update_tensor(mlp.layers[k].bias, g.layers[k].bias,
                          m.layers[k].bias, v.layers[k].bias, st, lr, bias1,
                          bias2);
    }
  };
  update_mlp(model.encoder, grads.encoder, st.m.encoder, st.v.encoder);
  update_mlp(model.decoder, grads.decoder, st.m.decoder, st.v.decoder);
  for (std::size_t l = 0; l < model.codebooks.size(); ++l) {
    adamw_update_tensor(model.codebooks[l], grads.codebooks[l],
                        st.m.codebooks[l], st.v.codebooks[l], st, lr, bias1,
                        bias2);
  }
}

double model_param_norm(const RqVaeModel& model) {
  double sq = 0.0;
  for (const auto& mlp : {model.encoder, model.decoder}) {
    for (const auto& layer : mlp.layers) {
      sq += layer.weight.squaredNorm() + layer.bias.squaredNorm();
    }
  }
  for (const auto& cb : model.codebooks) sq += cb.squaredNorm();
  return std::sqrt(sq);
}

}  // namespace

TrainStepResult train_step(const Eigen::MatrixXd& batch, RqVaeModel& model,
                           AdamWState& opt, const QuantizerConfig& cfg,
                           std::size_t batch_index) {
  BatchGradients bg = batch_gradients(model, batch, cfg.alpha);
  if (!std::isfinite(bg.mean_loss.total)) {
    throw DataError("[quantizer] non-finite loss at batch " +
                    std::to_string(batch_index) +
                    " (parameter norm = " +
                    std::to_string(model_param_norm(model)) + ")");
  }
  adamw_apply(model, bg.grads, opt, cfg.learning_rate);
  TrainStepResult out;
  out.mean_loss = bg.mean_loss;
  out.encoder_outputs = std::move(bg.encoder_outputs);
  out.indices = std::move(bg.indices);
  return out;
}

// ---------------------------------------------------------------------------
// Initialization

namespace {

MlpLayer init_layer(Eigen::Index out_dim, Eigen::Index in_dim, Rng& rng) {
  MlpLayer layer;
  layer.weight.resize(out_dim, in_dim);
  const double limit = 1.0 / std::sqrt(static_cast<double>(in_dim));
  for (Eigen::Index r = 0; r < out_dim; ++r) {
    for (Eigen::Index c = 0; c < in_dim; ++c) {
      layer.weight(r, c) = rng.next_double(-limit, limit);
    }
  }
  layer.bias.resize(out_dim);
  for (Eigen::Index r = 0; r < out_dim; ++r) {
    layer.bias[r] = rng.next_double(-limit, limit);
  }
  return layer;
}

Mlp init_mlp(const std::vector<Eigen::Index>& widths, Rng& rng) {
  Mlp mlp;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    mlp.layers.push_back(init_layer(widths[k + 1], widths[k], rng));
  }
  return mlp;
}

// Lloyd's algorithm with k-means++ seeding; empty clusters keep their
// previous centroid.
Eigen::MatrixXd kmeans(const Eigen::MatrixXd& points, Eigen::Index k,
                       int iterations, Rng& rng) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd centroids(k, points.cols());

  // k-means++ seeding
  centroids.row(0) = points.row(static_cast<Eigen::Index>(
      rng.next_below(static_cast<std::uint64_t>(n))));
  Eigen::VectorXd dist2 =
      (points.rowwise() - centroids.row(0)).rowwise().squaredNorm();
  for (Eigen::Index c = 1; c < k; ++c) {
    const double total = dist2.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      const double target = rng.next_double() * total;
      double acc = 0.0;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += dist2[i];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(
          rng.next_below(static_cast<std::uint64_t>(n)));
    }
    centroids.row(c) = points.row(pick);
    dist2 = dist2.cwiseMin(
        (points.rowwise() - centroids.row(c)).rowwise().squaredNorm());
  }

  std::vector<Eigen::Index> assignment(static_cast<std::size_t>(n), 0);
  for (int iter = 0; iter < iterations; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      double best_dist = (points.row(i) - centroids.row(0)).squaredNorm();
      for (Eigen::Index c = 1; c < k; ++c) {
        const double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_dist) {
          best = c;
          best_dist = d;
        }
      }
      assignment[static_cast<std::size_t>(i)] = best;
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(assignment[static_cast<std::size_t>(i)]) += points.row(i);
      counts[assignment[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts[c] > 0.0) centroids.row(c) = sums.row(c) / counts[c];
    }
  }
  return centroids;
}

}  // namespace

RqVaeModel init_model(const QuantizerConfig& cfg,
                      const Eigen::MatrixXd& sample) {
  cfg.validate();
  if (sample.rows() == 0 && cfg.codebook_init == CodebookInit::kKmeans) {
    throw ConfigError(
        "[quantizer] k-means codebook init requires a non-empty sample");
  }
  if (sample.cols() == 0) {
    throw ConfigError("[quantizer] sample must define the input dimension");
  }
  Rng rng(cfg.seed);

  std::vector<Eigen::Index> enc_widths{sample.cols()};
  for (int h : cfg.encoder_hidden) enc_widths.push_back(h);
  enc_widths.push_back(cfg.code_dim);
  std::vector<Eigen::Index> dec_widths(enc_widths.rbegin(), enc_widths.rend());

  RqVaeModel model;
  model.encoder = init_mlp(enc_widths, rng);
  model.decoder = init_mlp(dec_widths, rng);

  if (cfg.codebook_init == CodebookInit::kRandom) {
    const double limit = 1.0 / static_cast<double>(cfg.codebook_size);
    for (int l = 0; l < cfg.levels; ++l) {
      Eigen::MatrixXd cb(cfg.codebook_size, cfg.code_dim);
      for (Eigen::Index r = 0; r < cb.rows(); ++r) {
        for (Eigen::Index c = 0; c < cb.cols(); ++c) {
          cb(r, c) = rng.next_double(-limit, limit);
        }
      }
      model.codebooks.push_back(std::move(cb));
    }
    return model;
  }

  // k-means init on the encoded sample's residuals, level by level.
  Eigen::MatrixXd residuals(sample.rows(), cfg.code_dim);
  for (Eigen::Index i = 0; i < sample.rows(); ++i) {
    residuals.row(i) =
        mlp_forward(model.encoder, sample.row(i).transpose()).transpose();
  }
  for (int l = 0; l < cfg.levels; ++l) {
    Eigen::MatrixXd centroids =
        kmeans(residuals, cfg.codebook_size, 10, rng);
    for (Eigen::Index i = 0; i < residuals.rows(); ++i) {
      Eigen::Index best = 0;
      double best_dist = (residuals.row(i) - centroids.row(0)).squaredNorm();
      for (Eigen::Index c = 1; c < centroids.rows(); ++c) {
        const double d = (residuals.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_dist) {
          best = c;
          best_dist = d;
        }
      }
      residuals.row(i) -= centroids.row(best);
    }
    model.codebooks.push_back(std::move(centroids));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Training loop

TrainResult train(const EmbeddingTable& embeddings,
                  const QuantizerConfig& cfg) {
  cfg.validate();
  if (embeddings.count() == 0) {
    throw DataError("[quantizer] cannot train on an empty embedding table");
  }
  const Eigen::MatrixXd& data = embeddings.vectors();
  TrainResult result;
  result.model = init_model(cfg, data);
  AdamWState opt(result.model);
  Rng shuffle_rng(cfg.seed ^ 0x6d6f6269746f6bull);

  const auto n = static_cast<std::size_t>(data.rows());
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    EpochStats stats;
    std::vector<std::vector<bool>> used(
        static_cast<std::size_t>(cfg.levels),
        std::vector<bool>(static_cast<std::size_t>(cfg.codebook_size), false));
    Eigen::MatrixXd last_batch_outputs;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < n;
         start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t stop =
          std::min(n, start + static_cast<std::size_t>(cfg.batch_size));
      Eigen::MatrixXd batch(static_cast<Eigen::Index>(stop - start),
                            data.cols());
      for (std::size_t i = start; i < stop; ++i) {
        batch.row(static_cast<Eigen::Index>(i - start)) =
            data.row(static_cast<Eigen::Index>(order[i]));
      }
      TrainStepResult step =
          train_step(batch, result.model, opt, cfg, batch_index++);
      const auto weight = static_cast<double>(stop - start);
      stats.mean_rec += weight * step.mean_loss.rec;
      stats.mean_rq += weight * step.mean_loss.rq;
      for (const auto& idx : step.indices) {
        for (std::size_t l = 0; l < idx.size(); ++l) {
          used[l][static_cast<std::size_t>(idx[l])] = true;
        }
      }
      last_batch_outputs = std::move(step.encoder_outputs);
    }
    stats.mean_rec /= static_cast<double>(n);
    stats.mean_rq /= static_cast<double>(n);
    for (int l = 0; l < cfg.levels; ++l) {
      std::size_t count = 0;
      for (bool u : used[static_cast<std::size_t>(l)]) count += u ? 1 : 0;
      stats.utilization.push_back(static_cast<double>(count) /
                                  static_cast<double>(cfg.codebook_size));
    }
    result.history.push_back(stats);

    if (cfg.dead_code_reseed) {
      for (int l = 0; l < cfg.levels; ++l) {
        for (int c = 0; c < cfg.codebook_size; ++c) {
          if (used[static_cast<std::size_t>(l)][static_cast<std::size_t>(c)]) {
            continue;
          }
          const auto pick = static_cast<Eigen::Index>(shuffle_rng.next_below(
              static_cast<std::uint64_t>(last_batch_outputs.rows())));
          result.model.codebooks[static_cast<std::size_t>(l)].row(c) =
              last_batch_outputs.row(pick);
          opt.m.codebooks[static_cast<std::size_t>(l)].row(c).setZero();
          opt.v.codebooks[static_cast<std::size_t>(l)].row(c).setZero();
        }
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Tokenization

TokenizeOutput tokenize_all(const EmbeddingTable& embeddings,
                            const RqVaeModel& model) {
  return tokenize_all(embeddings, model, embeddings.ids());
}

TokenizeOutput tokenize_all(const EmbeddingTable& embeddings,
                            const RqVaeModel& model,
                            const std::vector<std::string>& ids) {
  TokenizeOutput out;
  Eigen::MatrixXd zhat(static_cast<Eigen::Index>(ids.size()),
                       model.code_dim());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const Eigen::VectorXd s = embeddings.vector_for(ids[i]);
    const Eigen::VectorXd z_e = mlp_forward(model.encoder, s);
    const QuantizeResult q = quantize(z_e, model.codebooks);
    out.codes[ids[i]] = q.indices;
    zhat.row(static_cast<Eigen::Index>(i)) = q.zhat.transpose();
  }
  out.zhat = EmbeddingTable(ids, std::move(zhat));
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

void append_mlp(const Mlp& mlp, std::vector<double>& values) {
  for (const auto& layer : mlp.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        values.push_back(layer.weight(r, c));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      values.push_back(layer.bias[r]);
    }
  }
}

std::size_t read_mlp(Mlp& mlp, const std::vector<double>& values,
                     std::size_t pos) {
  for (auto& layer : mlp.layers) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        layer.weight(r, c) = values[pos++];
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      layer.bias[r] = values[pos++];
    }
  }
  return pos;
}

json config_to_json(const QuantizerConfig& cfg) {
  json j;
  j["levels"] = cfg.levels;
  j["codebook_size"] = cfg.codebook_size;
  j["code_dim"] = cfg.code_dim;
  j["alpha"] = cfg.alpha;
  j["encoder_hidden"] = cfg.encoder_hidden;
  j["learning_rate"] = cfg.learning_rate;
  j["batch_size"] = cfg.batch_size;
  j["epochs"] = cfg.epochs;
  j["seed"] = cfg.seed;
  j["codebook_init"] = to_string(cfg.codebook_init);
  j["dead_code_reseed"] = cfg.dead_code_reseed;
  return j;
}

QuantizerConfig config_from_json(const json& j) {
  QuantizerConfig cfg;
  cfg.levels = j.at("levels").get<int>();
  cfg.codebook_size = j.at("codebook_size").get<int>();
  cfg.code_dim = j.at("code_dim").get<int>();
  cfg.alpha = j.at("alpha").get<double>();
  cfg.encoder_hidden = j.at("encoder_hidden").get<std::vector<int>>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.batch_size = j.at("batch_size").get<int>();
  cfg.epochs = j.at("epochs").get<int>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.codebook_init =
      codebook_init_from_string(j.at("codebook_init").get<std::string>());
  cfg.dead_code_reseed = j.at("dead_code_reseed").get<bool>();
  return cfg;
}

Mlp shaped_mlp(const std::vector<Eigen::Index>& widths) {
  Mlp mlp;
  for (std::size_t k = 0; k + 1 < widths.size(); ++k) {
    mlp.layers.push_back({Eigen::MatrixXd::Zero(widths[k + 1], widths[k]),
                          Eigen::VectorXd::Zero(widths[k + 1])});
  }
  return mlp;
}

}  // namespace

void save_checkpoint(const std::string& manifest_path, const RqVaeModel& model,
                     const QuantizerConfig& cfg,
                     const std::vector<EpochStats>& history) {
  json manifest;
  manifest["format_version"] = 1;
  manifest["config"] = config_to_json(cfg);
  manifest["input_dim"] = model.input_dim();
  manifest["epoch"] = history.size();
  json hist = json::array();
  for (const auto& e : history) {
    hist.push_back({{"rec", e.mean_rec},
                    {"rq", e.mean_rq},
                    {"utilization", e.utilization}});
  }
  manifest["loss_history"] = std::move(hist);
  std::ofstream out(manifest_path);
  if (!out) {
    throw ConfigError("[quantizer] cannot write checkpoint manifest: " +
                      manifest_path);
  }
  out << manifest.dump(2) << "\n";

  std::vector<double> values;
  append_mlp(model.encoder, values);
  append_mlp(model.decoder, values);
  for (const auto& cb : model.codebooks) {
    for (Eigen::Index r = 0; r < cb.rows(); ++r) {
      for (Eigen::Index c = 0; c < cb.cols(); ++c) {
        values.push_back(cb(r, c));
      }
    }
  }
  write_f32_blob(embedding_blob_path(manifest_path), values);
}

Checkpoint load_checkpoint(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) {
    throw ConfigError("[quantizer] cannot open checkpoint manifest: " +
                      manifest_path);
  }
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw DataError("[quantizer] invalid checkpoint manifest: " +
                    std::string(e.what()));
  }
  Checkpoint ckpt;
  ckpt.config = config_from_json(manifest.at("config"));
  ckpt.epoch = manifest.at("epoch").get<int>();
  for (const auto& e : manifest.at("loss_history")) {
    EpochStats stats;
    stats.mean_rec = e.at("rec").get<double>();
    stats.mean_rq = e.at("rq").get<double>();
    stats.utilization = e.at("utilization").get<std::vector<double>>();
    ckpt.history.push_back(std::move(stats));
  }
  const auto input_dim = manifest.at("input_dim").get<Eigen::Index>();

  std::vector<Eigen::Index> enc_widths{input_dim};
  for (int h : ckpt.config.encoder_hidden) enc_widths.push_back(h);
  enc_widths.push_back(ckpt.config.code_dim);
  std::vector<Eigen::Index> dec_widths(enc_widths.rbegin(), enc_widths.rend());
  ckpt.model.encoder = shaped_mlp(enc_widths);
  ckpt.model.decoder = shaped_mlp(dec_widths);
  std::size_t total = 0;
  for (const auto& mlp : {ckpt.model.encoder, ckpt.model.decoder}) {
    for (const auto& layer : mlp.layers) {
      total += static_cast<std::size_t>(layer.weight.size()) +
               static_cast<std::size_t>(layer.bias.size());
    }
  }
  total += static_cast<std::size_t>(ckpt.config.levels) *
           static_cast<std::size_t>(ckpt.config.codebook_size) *
           static_cast<std::size_t>(ckpt.config.code_dim);
  const auto values = read_f32_blob(embedding_blob_path(manifest_path), total,
                                    "quantizer checkpoint");
  std::size_t pos = read_mlp(ckpt.model.encoder, values, 0);
  pos = read_mlp(ckpt.model.decoder, values, pos);
  for (int l = 0; l < ckpt.config.levels; ++l) {
    Eigen::MatrixXd cb(ckpt.config.codebook_size, ckpt.config.code_dim);
    for (Eigen::Index r = 0; r < cb.rows(); ++r) {
      for (Eigen::Index c = 0; c < cb.cols(); ++c) {
        cb(r, c) = values[pos++];
      }
    }
    ckpt.model.codebooks.push_back(std::move(cb));
  }
  return ckpt;
}

}  // namespace mobitok
