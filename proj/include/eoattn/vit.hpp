#pragma once

#include <string>
#include <vector>

#include "eoattn/attention.hpp"
#include "eoattn/tensor.hpp"

namespace eoattn::nn {

struct VitConfig {
  long embed_dim = 32;
  long hidden_dim = 64;
  int heads = 2;
  int layers = 2;
  int patch = 4;
  int channels = 1;
  long num_patches = 16;
  long patch_dim() const { return long(patch) * patch * channels; }
  int classes = 10;
  double dropout_p = 0.0;
  bool causal = false;  // true for the character-LM variant
  long vocab = 0;       // > 0 switches to token-embedding input
};

/// Paper-tuned model preset ("vit-paper"): embedding 256, hidden 512,
/// 8 heads, 6 layers, patch 4, 3 channels, 64 patches, 10 classes,
/// dropout 0.2. Throws ConfigError for unknown names.
VitConfig vit_preset(const std::string& name);

/// Splits a row-major (channels, h, w) image into flattened patches:
/// one row of length patch*patch*channels per patch, raster order.
std::vector<double> patchify(std::span<const double> image, int h, int w, int channels,
                             int patch);

template <class S>
struct TransformerBlock {
  TensorT<S> ln1_g, ln1_b, ln2_g, ln2_b;
  std::vector<TensorT<S>> wq, wk, wv, wo;  // per head: (d x dh), (dh x d) for wo
  TensorT<S> w1, b1, w2, b2;               // MLP

  void init(const VitConfig& cfg, Rng& rng) {
    const long d = cfg.embed_dim;
    const long dh = d / cfg.heads;
    ln1_g = TensorT<S>::full({1, d}, S(1), true);
    ln1_b = TensorT<S>::zeros({1, d}, true);
    ln2_g = TensorT<S>::full({1, d}, S(1), true);
    ln2_b = TensorT<S>::zeros({1, d}, true);
    for (int h = 0; h < cfg.heads; ++h) {
      wq.push_back(TensorT<S>::randn({d, dh}, S(0.02), rng));
      wk.push_back(TensorT<S>::randn({d, dh}, S(0.02), rng));
      wv.push_back(TensorT<S>::randn({d, dh}, S(0.02), rng));
      wo.push_back(TensorT<S>::randn({dh, d}, S(0.02), rng));
    }
    w1 = TensorT<S>::randn({d, cfg.hidden_dim}, S(0.02), rng);
    b1 = TensorT<S>::zeros({1, cfg.hidden_dim}, true);
    w2 = TensorT<S>::randn({cfg.hidden_dim, d}, S(0.02), rng);
    b2 = TensorT<S>::zeros({1, d}, true);
  }

  TensorT<S> forward(const TensorT<S>& x, const AttentionConfig& attn, AttnMode mode, Rng* rng,
                     bool training, double dropout_p, Rng* dropout_rng) const {
    TensorT<S> h = layernorm_rows(x, ln1_g, ln1_b);
    const long dh = wq[0].cols();
    AttentionConfig head_cfg = attn;
    head_cfg.d_k = dh;
    TensorT<S> attn_out;
    for (size_t head = 0; head < wq.size(); ++head) {
      TensorT<S> q = matmul(h, wq[head]);
      TensorT<S> k = matmul(h, wk[head]);
      TensorT<S> v = matmul(h, wv[head]);
      TensorT<S> o = matmul(attention_forward(q, k, v, head_cfg, rng, mode), wo[head]);
      attn_out = attn_out.valid() ? add(attn_out, o) : o;
    }
    if (dropout_rng) attn_out = dropout(attn_out, dropout_p, training, *dropout_rng);
    TensorT<S> x1 = add(x, attn_out);
    TensorT<S> h2 = layernorm_rows(x1, ln2_g, ln2_b);
    TensorT<S> ff = add_rowvec(matmul(gelu(add_rowvec(matmul(h2, w1), b1)), w2), b2);
    if (dropout_rng) ff = dropout(ff, dropout_p, training, *dropout_rng);
    return add(x1, ff);
  }

  void collect(std::vector<TensorT<S>>& out) {
    out.insert(out.end(), {ln1_g, ln1_b, ln2_g, ln2_b});
    for (auto& t : wq) out.push_back(t);
    for (auto& t : wk) out.push_back(t);
    for (auto& t : wv) out.push_back(t);
    for (auto& t : wo) out.push_back(t);
    out.insert(out.end(), {w1, b1, w2, b2});
  }
};

/// Toy Vision Transformer: patch embed + positional embeddings + transformer
/// blocks + mean pooling + class head. With cfg.vocab > 0 the input is a
/// token sequence instead of patches and the head emits per-position logits
/// (the character-LM variant).
template <class S>
struct VitModel {
  VitConfig cfg;
  TensorT<S> w_embed, b_embed;  // patch embed (or token table when vocab > 0)
  TensorT<S> pos;
  std::vector<TransformerBlock<S>> blocks;
  TensorT<S> head_w, head_b;
  act::ActivationSet nonlinearity;

  void init(const VitConfig& c, Rng& rng) {
    cfg = c;
    const long d = cfg.embed_dim;
    if (cfg.vocab > 0) {
      w_embed = TensorT<S>::randn({cfg.vocab, d}, S(0.02), rng);
    } else {
      w_embed = TensorT<S>::randn({cfg.patch_dim(), d}, S(0.02), rng);
      b_embed = TensorT<S>::zeros({1, d}, true);
    }
    // num_patches doubles as the sequence length in the token path
    pos = TensorT<S>::randn({cfg.num_patches, d}, S(0.02), rng);
    blocks.resize(size_t(cfg.layers));
    for (auto& b : blocks) b.init(cfg, rng);
    const long out_dim = cfg.vocab > 0 ? cfg.vocab : cfg.classes;
    head_w = TensorT<S>::randn({d, out_dim}, S(0.02), rng);
    head_b = TensorT<S>::zeros({1, out_dim}, true);
  }

  std::vector<TensorT<S>> params() {
    std::vector<TensorT<S>> out{w_embed};
    if (b_embed.valid()) out.push_back(b_embed);
    out.push_back(pos);
    for (auto& b : blocks) b.collect(out);
    out.push_back(head_w);
    out.push_back(head_b);
    return out;
  }

  /// Patch path: `patches` is (num_patches x patch_dim) leaf data.
  TensorT<S> forward_patches(const TensorT<S>& patches, AttnMode mode, Rng* rng, bool training,
                             Rng* dropout_rng) const {
    TensorT<S> x = add(add_rowvec(matmul(patches, w_embed), b_embed), pos);
    AttentionConfig attn;
    attn.heads = cfg.heads;
    attn.causal_mask = cfg.causal;
    attn.nonlinearity = nonlinearity;
    for (const auto& b : blocks) {
      x = b.forward(x, attn, mode, rng, training, cfg.dropout_p, dropout_rng);
    }
    TensorT<S> pooled = mean_rows(x);
    return add_rowvec(matmul(pooled, head_w), head_b);  // (1 x classes)
  }

  /// Token path for the character LM: per-position logits (seq x vocab).
  TensorT<S> forward_tokens(std::span<const int> tokens, AttnMode mode, Rng* rng, bool training,
                            Rng* dropout_rng) const {
    TensorT<S> x = add(embedding_rows(w_embed, tokens), pos);
    AttentionConfig attn;
    attn.heads = cfg.heads;
    attn.causal_mask = cfg.causal;
    attn.nonlinearity = nonlinearity;
    for (const auto& b : blocks) {
      x = b.forward(x, attn, mode, rng, training, cfg.dropout_p, dropout_rng);
    }
    return add_rowvec(matmul(x, head_w), head_b);  // (seq x vocab)
  }
};

}  // namespace eoattn::nn
