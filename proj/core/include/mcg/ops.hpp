#pragma once

#include <cstddef>

#include "mcg/autograd.hpp"

namespace mcg::ad {

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);

/// x[C, ...] + v[C] broadcast over every trailing position.
Var add_channel(const Var& x, const Var& v);

Var silu(const Var& x);

/// Per-frame 3x3 convolution with zero padding: x[Ci,F,H,W], w[Co,Ci,3,3], b[Co].
Var conv3x3(const Var& x, const Var& w, const Var& b);

/// Channel-mixing affine map: x[Ci, ...] -> [Co, ...], w[Co,Ci], b[Co].
/// Works for plain vectors ([Ci]) as well as feature volumes.
Var linear(const Var& x, const Var& w, const Var& b);

/// Group normalization over (C/G, F, H, W) with per-channel affine.
Var group_norm(const Var& x, const Var& gamma, const Var& beta, std::size_t groups, double eps = 1e-5);

/// Normalization across channels at each (f, h, w) position independently.
Var layer_norm_channels(const Var& x, const Var& gamma, const Var& beta, double eps = 1e-5);

Var avg_pool2(const Var& x);
Var upsample2(const Var& x);
Var concat_channels(const Var& a, const Var& b);

enum class AttentionAxis {
    kTemporal,  ///< one sequence per spatial site, running over frames
    kSpatial,   ///< one sequence per frame, running over H*W sites
};

/// Single-head scaled dot-product attention; q, k, v all [C, F, H, W].
Var attention(const Var& q, const Var& k, const Var& v, AttentionAxis axis);

/// Row `index` of an embedding table [K, E].
Var row(const Var& table, std::size_t index);

/// Sum of squared differences (scalar).
Var sum_squared_error(const Var& a, const Var& b);

}  // namespace mcg::ad
