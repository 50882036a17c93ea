#include "strokenet/isa.hpp"

#include <algorithm>

#include "strokenet/errors.hpp"

namespace strokenet {

using ad::Graph;
using ad::Tensor;

ReferencePairSet build_pair_geometry(const Document& doc,
                                     const std::vector<ReferenceSelection>& selections) {
  if (selections.size() != doc.strokes.size())
    throw ValidationError("build_pair_geometry: " + std::to_string(selections.size()) +
                          " selections for " + std::to_string(doc.strokes.size()) +
                          " strokes");
  ReferencePairSet out;
  out.num_strokes = doc.strokes.size();
  for (std::size_t si = 0; si < doc.strokes.size(); ++si) {
    const auto& idx = selections[si].indices;
    if (idx.empty()) throw ValidationError("build_pair_geometry: empty selection");
    out.d_max = std::max(out.d_max, idx.size());
    for (std::size_t slot = 0; slot < idx.size(); ++slot) {
      if (slot > 0 && idx[slot] <= idx[slot - 1])
        throw ValidationError("build_pair_geometry: selection indices must strictly increase");
      if (idx[slot] >= doc.strokes[si].points.size())
        throw ValidationError("build_pair_geometry: selection index out of range");
      const Point& p = doc.strokes[si].points[idx[slot]];
      out.points.push_back(p.x);
      out.points.push_back(p.y);
      out.stroke_of.push_back(si);
      out.slot_of.push_back(slot);
    }
  }
  out.mask.assign(out.d_max * out.num_strokes, 0);
  for (std::size_t j = 0; j < out.stroke_of.size(); ++j) {
    out.mask[out.slot_of[j] * out.num_strokes + out.stroke_of[j]] = 1;
  }
  return out;
}

IsaParams make_isa_params(ParamRegistry& reg, std::size_t conv_channels, std::size_t hidden) {
  IsaParams p;
  p.conv_stroke = reg.conv1d("isa.conv_stroke", 2, conv_channels, 3);
  p.lstm_stroke = reg.lstm("isa.lstm_stroke", conv_channels, hidden);
  p.conv_ref = reg.conv1d("isa.conv_ref", 2, conv_channels, 3);
  p.lstm_ref = reg.lstm("isa.lstm_ref", conv_channels, hidden);
  p.w_q = reg.uniform("isa.w_q", {hidden, hidden}, hidden);
  p.w_k = reg.uniform("isa.w_k", {hidden, hidden}, hidden);
  p.w_v = reg.uniform("isa.w_v", {hidden, hidden}, hidden);
  p.ln_gain = reg.constant("isa.ln_gain", {hidden}, 1.0);
  p.ln_shift = reg.constant("isa.ln_shift", {hidden}, 0.0);
  return p;
}

namespace {

Tensor coords_tensor(const std::vector<Point>& pts) {
  std::vector<double> data;
  data.reserve(pts.size() * 2);
  for (const Point& p : pts) {
    data.push_back(p.x);
    data.push_back(p.y);
  }
  return Tensor::from_data({pts.size(), 2}, std::move(data));
}

}  // namespace

Tensor encode_stroke_features(Graph& g, const Document& doc, const IsaParams& p) {
  std::vector<Tensor> rows;
  rows.reserve(doc.strokes.size());
  for (const Stroke& s : doc.strokes) {
    Tensor seq = coords_tensor(s.points);
    Tensor conv = g.conv1d(seq, p.conv_stroke.kernel, p.conv_stroke.bias);
    Tensor hidden = g.lstm_sequence(conv, p.lstm_stroke);
    rows.push_back(g.gather(hidden, {s.points.size() - 1}));  // final hidden state
  }
  return g.concat(rows, 0);
}

Tensor encode_reference_features(Graph& g, const Document& doc,
                                 const std::vector<ReferenceSelection>& selections,
                                 const IsaParams& p) {
  std::vector<Tensor> blocks;
  blocks.reserve(doc.strokes.size());
  for (std::size_t si = 0; si < doc.strokes.size(); ++si) {
    std::vector<Point> ref_pts;
    ref_pts.reserve(selections[si].indices.size());
    for (std::size_t idx : selections[si].indices) ref_pts.push_back(doc.strokes[si].points[idx]);
    Tensor seq = coords_tensor(ref_pts);
    Tensor conv = g.conv1d(seq, p.conv_ref.kernel, p.conv_ref.bias);
    blocks.push_back(g.lstm_sequence(conv, p.lstm_ref));  // one row per reference point
  }
  return g.concat(blocks, 0);
}

Tensor broadcast_stroke_features(Graph& g, const Tensor& f_s, const ReferencePairSet& pairs) {
  return g.gather(f_s, pairs.stroke_of);
}

Tensor inline_sequence_attention(Graph& g, const Tensor& f_p, const Tensor& f_s,
                                 const ReferencePairSet& pairs, const IsaParams& p) {
  const std::size_t n_total = pairs.total();
  if (f_p.rows() != n_total || f_s.rows() != pairs.num_strokes || f_p.cols() != f_s.cols())
    throw ShapeError("inline_sequence_attention: pair set expects (" +
                     std::to_string(n_total) + " x C) point features and (" +
                     std::to_string(pairs.num_strokes) + " x C) stroke features");
  for (std::size_t j = 0; j < n_total; ++j) {
    if (!pairs.mask_at(pairs.slot_of[j], pairs.stroke_of[j]))
      throw ShapeError("inline_sequence_attention: mask inconsistent with pair set");
  }

  // Keys and values come from the stroke features, broadcast across slots.
  Tensor keys_t = g.transpose(g.matmul(f_s, p.w_k));  // (C x M)
  Tensor values = g.matmul(f_s, p.w_v);               // (M x C)

  // Rows of f_p grouped by slot. Only occupied slots produce queries, which
  // is what excludes padding from the softmax: a padded (slot, stroke) cell
  // simply never appears.
  std::vector<std::vector<std::size_t>> rows_by_slot(pairs.d_max);
  for (std::size_t j = 0; j < n_total; ++j) rows_by_slot[pairs.slot_of[j]].push_back(j);

  std::vector<Tensor> slot_outputs;
  std::vector<std::size_t> back_position(n_total);
  std::size_t stacked = 0;
  for (std::size_t d = 0; d < pairs.d_max; ++d) {
    const auto& rows = rows_by_slot[d];
    if (rows.empty()) continue;
    Tensor queries = g.matmul(g.gather(f_p, rows), p.w_q);  // (m_d x C)
    Tensor scores = g.matmul(queries, keys_t);              // (m_d x M)
    Tensor weights = g.softmax(scores, 1);
    slot_outputs.push_back(g.matmul(weights, values));      // (m_d x C)
    for (std::size_t r : rows) back_position[r] = stacked++;
  }
  Tensor attended = g.concat(slot_outputs, 0);
  Tensor flat = g.gather(attended, back_position);  // back to pair-set order

  Tensor f_s_b = broadcast_stroke_features(g, f_s, pairs);
  Tensor normed = g.layer_norm(flat, p.ln_gain, p.ln_shift);
  return g.relu(g.add(f_s_b, normed));
}

}  // namespace strokenet
