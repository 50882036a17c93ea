#pragma once

#include <cstdint>
#include <vector>

#include "strokenet/ink.hpp"
#include "strokenet/nn.hpp"
#include "strokenet/ref_select.hpp"
#include "strokenet/spatial.hpp"
#include "strokenet/tensor.hpp"

namespace strokenet {

// Flat reference point/feature pairs for one document. Points are stored
// stroke-major: all of stroke 0's reference points (in index order), then
// stroke 1's, and so on. `mask` has d_max x M validity bits (slot-major).
struct ReferencePairSet {
  Coords points;                       // N_total x 2
  std::vector<std::size_t> stroke_of;  // N_total
  std::vector<std::size_t> slot_of;    // N_total, within-stroke ordinal
  std::size_t num_strokes = 0;
  std::size_t d_max = 0;
  std::vector<std::uint8_t> mask;      // d_max x M
  ad::Tensor features;                 // N_total x C once the ISA stage ran

  std::size_t total() const { return stroke_of.size(); }
  bool mask_at(std::size_t slot, std::size_t stroke) const {
    return mask[slot * num_strokes + stroke] != 0;
  }
};

ReferencePairSet build_pair_geometry(const Document& doc,
                                     const std::vector<ReferenceSelection>& selections);

struct IsaParams {
  Conv1dParams conv_stroke;
  Conv1dParams conv_ref;
  ad::LstmParams lstm_stroke;
  ad::LstmParams lstm_ref;
  ad::Tensor w_q, w_k, w_v;        // (C x C)
  ad::Tensor ln_gain, ln_shift;    // (C)
};

IsaParams make_isa_params(ParamRegistry& reg, std::size_t conv_channels, std::size_t hidden);

// Per-stroke sequence feature: conv over the full (x, y) trajectory, LSTM,
// final hidden state. Output (M x C).
ad::Tensor encode_stroke_features(ad::Graph& g, const Document& doc, const IsaParams& p);

// Per-reference-point sequence features: conv + LSTM over each stroke's
// ordered reference coordinates, hidden state at every step. Output
// (N_total x C) in pair-set order.
ad::Tensor encode_reference_features(ad::Graph& g, const Document& doc,
                                     const std::vector<ReferenceSelection>& selections,
                                     const IsaParams& p);

// Slot-wise attention of reference queries over stroke keys/values followed
// by LayerNorm, residual against the broadcast stroke features and ReLU.
ad::Tensor inline_sequence_attention(ad::Graph& g, const ad::Tensor& f_p,
                                     const ad::Tensor& f_s, const ReferencePairSet& pairs,
                                     const IsaParams& p);

// Ablation path: every reference point takes its stroke's feature unchanged.
ad::Tensor broadcast_stroke_features(ad::Graph& g, const ad::Tensor& f_s,
                                     const ReferencePairSet& pairs);

}  // namespace strokenet
