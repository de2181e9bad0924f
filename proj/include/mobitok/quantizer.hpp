#ifndef MOBITOK_QUANTIZER_HPP
#define MOBITOK_QUANTIZER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mobitok/embed.hpp"

namespace mobitok {

enum class CodebookInit { kKmeans, kRandom };

CodebookInit codebook_init_from_string(const std::string& name);
std::string to_string(CodebookInit init);

struct QuantizerConfig {
  int levels = 4;
  int codebook_size = 256;
  int code_dim = 32;
  double alpha = 0.25;
  std::vector<int> encoder_hidden = {512, 128};
  double learning_rate = 0.001;
  int batch_size = 1024;
  int epochs = 200;
  std::uint64_t seed = 42;
  CodebookInit codebook_init = CodebookInit::kKmeans;
  bool dead_code_reseed = true;

  void validate() const;  // throws ConfigError on bad values
};

// Plain MLP: ReLU after every hidden layer, linear output.
struct MlpLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

struct Mlp {
  std::vector<MlpLayer> layers;
  Eigen::Index in_dim() const { return layers.front().weight.cols(); }
  Eigen::Index out_dim() const { return layers.back().weight.rows(); }
};

Eigen::VectorXd mlp_forward(const Mlp& mlp, const Eigen::VectorXd& x);

// Gradient of a scalar loss w.r.t. the MLP input, given the gradient w.r.t.
// its output at the same point. Does not touch parameter gradients.
Eigen::VectorXd mlp_input_gradient(const Mlp& mlp, const Eigen::VectorXd& x,
                                   const Eigen::VectorXd& g_out);

struct RqVaeModel {
  Mlp encoder;                             // input_dim -> code_dim
  Mlp decoder;                             // code_dim -> input_dim
  std::vector<Eigen::MatrixXd> codebooks;  // levels of (K x code_dim)

  Eigen::Index input_dim() const { return encoder.in_dim(); }
  Eigen::Index code_dim() const { return encoder.out_dim(); }
  int levels() const { return static_cast<int>(codebooks.size()); }
  Eigen::Index codebook_size() const { return codebooks.front().rows(); }
};

struct QuantizeResult {
  std::vector<int> indices;                // c_1..c_L, each in [0, K)
  std::vector<Eigen::VectorXd> residuals;  // r_0..r_L
  Eigen::VectorXd zhat;                    // sum of chosen codevectors
};

// Nearest codevector per level by squared distance, ties to the lowest
// index; residual carried forward between levels.
QuantizeResult quantize(const Eigen::VectorXd& r0,
                        const std::vector<Eigen::MatrixXd>& codebooks);

struct LossBreakdown {
  double rec = 0.0;
  double rq = 0.0;
  double total = 0.0;
};

LossBreakdown losses(const Eigen::VectorXd& s, const RqVaeModel& model,
                     double alpha);

// Gradient container mirroring the model's parameter shapes.
struct ModelGrads {
  Mlp encoder;
  Mlp decoder;
  std::vector<Eigen::MatrixXd> codebooks;
};

ModelGrads zero_grads_like(const RqVaeModel& model);

// Straight-through gradients for one example, with the encoder-output
// pieces reported separately for the stop-gradient tests.
struct ExampleGradients {
  ModelGrads grads;
  LossBreakdown loss;
  Eigen::VectorXd encoder_out_grad_rec;     // reconstruction path
  Eigen::VectorXd encoder_out_grad_commit;  // commitment path
  QuantizeResult quant;
  Eigen::VectorXd encoder_out;
};

ExampleGradients example_gradients(const RqVaeModel& model,
                                   const Eigen::VectorXd& s, double alpha);

// Mean-of-batch gradients plus the per-batch observations the training
// loop needs (loss means, chosen codes, encoder outputs for reseeding).
struct BatchGradients {
  ModelGrads grads;
  LossBreakdown mean_loss;
  Eigen::MatrixXd encoder_outputs;       // rows = batch examples
  std::vector<std::vector<int>> indices; // per example
};

BatchGradients batch_gradients(const RqVaeModel& model,
                               const Eigen::MatrixXd& batch, double alpha);

struct AdamWState {
  ModelGrads m;
  ModelGrads v;
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  explicit AdamWState(const RqVaeModel& model)
      : m(zero_grads_like(model)), v(zero_grads_like(model)) {}
};

struct TrainStepResult {
  LossBreakdown mean_loss;
  Eigen::MatrixXd encoder_outputs;
  std::vector<std::vector<int>> indices;
};

// One AdamW update on the mean total loss of the batch.
TrainStepResult train_step(const Eigen::MatrixXd& batch, RqVaeModel& model,
                           AdamWState& opt, const QuantizerConfig& cfg,
                           std::size_t batch_index = 0);

struct EpochStats {
  double mean_rec = 0.0;
  double mean_rq = 0.0;
  std::vector<double> utilization;  // per level, fraction of codes used
};

// Encoder/decoder from scaled-uniform fan-in init; codebooks either
// seeded-uniform in [-1/K, 1/K] or k-means on the encoded sample's
// residuals, level by level.
RqVaeModel init_model(const QuantizerConfig& cfg,
                      const Eigen::MatrixXd& sample);

struct TrainResult {
  RqVaeModel model;
  std::vector<EpochStats> history;
};

TrainResult train(const EmbeddingTable& embeddings,
                  const QuantizerConfig& cfg);

struct TokenizeOutput {
  std::map<std::string, std::vector<int>> codes;  // id -> [c_1..c_L]
  EmbeddingTable zhat;                            // quantized representations
};

TokenizeOutput tokenize_all(const EmbeddingTable& embeddings,
                            const RqVaeModel& model);
TokenizeOutput tokenize_all(const EmbeddingTable& embeddings,
                            const RqVaeModel& model,
                            const std::vector<std::string>& ids);

// Checkpoint: JSON manifest next to a float32 blob holding the parameters
// in fixed order (encoder layers, decoder layers, codebooks level-major).
void save_checkpoint(const std::string& manifest_path, const RqVaeModel& model,
                     const QuantizerConfig& cfg,
                     const std::vector<EpochStats>& history);

struct Checkpoint {
  RqVaeModel model;
  QuantizerConfig config;
  int epoch = 0;
  std::vector<EpochStats> history;
};

Checkpoint load_checkpoint(const std::string& manifest_path);

}  // namespace mobitok

#endif  // MOBITOK_QUANTIZER_HPP
