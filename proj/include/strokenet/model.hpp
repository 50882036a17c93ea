#pragma once

#include <string>
#include <utility>
#include <vector>

#include "strokenet/config.hpp"
#include "strokenet/heads.hpp"
#include "strokenet/hierarchy.hpp"
#include "strokenet/isa.hpp"

namespace strokenet {

// Every parameter tensor of the network, plus a named registry for the
// optimizer and checkpoints. Construction order is fixed (ISA, hierarchy,
// heads) so upstream initial weights do not shift when an ablation flag
// changes a downstream shape.
struct ModelParams {
  IsaParams isa;
  HierarchyParams hierarchy;
  Mlp rpts_mlp;     // absent in rpts_concat mode
  Mlp classifier;
  Mlp aux_mlp;
  std::vector<std::pair<std::string, ad::Tensor>> named;

  std::vector<ad::Tensor> trainable() const;
  std::vector<ad::Tensor> aux_parameters() const;  // tensors named aux.*
  void zero_grads() const;
};

ModelParams make_model_params(const TrainConfig& cfg);

// Intermediate tensors of one forward pass, for tests and diagnostics.
struct ForwardTrace {
  ReferencePairSet pairs;
  ad::Tensor f_s;          // (M x C) stroke sequence features
  ad::Tensor f_p;          // (N_total x C); undefined when isa_off
  ad::Tensor r_f;          // (N_total x C) reference features
  ad::Tensor point_feats;  // (N_total x C_out)
  ad::Tensor stroke_feats;
  EncodeDecodeTrace hierarchy;
};

struct ModelOutput {
  ad::Tensor logits;      // (M x T)
  ad::Tensor aux_logits;  // (M-1 x 2)
  ReferencePairSet pairs;
};

// Full pipeline on one normalized document: reference selection, ISA,
// encoder-decoder, stroke regression and both heads.
ModelOutput model_forward(ad::Graph& g, const Document& normalized_doc,
                          const TrainConfig& cfg, const ModelParams& params,
                          ForwardTrace* trace = nullptr);

// Checkpoint: config + named parameter values, JSON, full double precision.
void save_checkpoint(const ModelParams& params, const TrainConfig& cfg,
                     const std::string& path);

struct Checkpoint {
  TrainConfig config;
  ModelParams params;
};

Checkpoint load_checkpoint(const std::string& path);

}  // namespace strokenet
