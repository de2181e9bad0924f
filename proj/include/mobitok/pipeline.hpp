#ifndef MOBITOK_PIPELINE_HPP
#define MOBITOK_PIPELINE_HPP

#include <string>

#include "mobitok/config.hpp"

namespace mobitok {

// One function per CLI subcommand. Each reads its declared inputs and
// writes its declared artifacts into the configured output directory.
void run_ingest(const PipelineConfig& cfg);
void run_describe(const PipelineConfig& cfg);
void run_embed(const PipelineConfig& cfg);
void run_train_quantizer(const PipelineConfig& cfg);
void run_tokenize(const PipelineConfig& cfg);
void run_build_sft(const PipelineConfig& cfg);
void run_fit_scorer(const PipelineConfig& cfg);
void run_predict(const PipelineConfig& cfg);
void run_recover(const PipelineConfig& cfg);
void run_evaluate(const PipelineConfig& cfg);
void run_consistency(const PipelineConfig& cfg);
void run_sweep(const PipelineConfig& cfg);

// Resolves the embedding manifest the downstream stages read: the external
// one when configured, otherwise the pipeline-built table.
std::string resolved_embeddings_path(const PipelineConfig& cfg);

}  // namespace mobitok

#endif  // MOBITOK_PIPELINE_HPP
