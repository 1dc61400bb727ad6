// The SAKT network: interaction/exercise/position embeddings, causal
// multi-head self-attention blocks with residual + layer norm, a ReLU feed
// forward layer, and a sigmoid prediction head. Forward records every
// intermediate needed for the exact analytic backward pass.
#ifndef SAKT_MODEL_HPP
#define SAKT_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sakt/data.hpp"
#include "sakt/matrix.hpp"
#include "sakt/ops.hpp"
#include "sakt/rng.hpp"

namespace sakt {

struct ModelConfig {
  int num_exercises = 0;
  int d = 50;       // latent dimension
  int n = 50;       // window length
  int heads = 5;
  int blocks = 1;   // 0, 1 or 2 self-attention blocks
  bool no_pe = false;
  bool no_residual = false;

  void validate() const {
    if (num_exercises < 1) throw std::invalid_argument("ModelConfig: num_exercises < 1");
    if (d < 1 || n < 2 || heads < 1) {
      throw std::invalid_argument("ModelConfig: d, n, heads out of range");
    }
    if (blocks < 0 || blocks > 2) {
      throw std::invalid_argument("ModelConfig: blocks must be 0, 1 or 2");
    }
  }

  bool operator==(const ModelConfig&) const = default;
};

template <class Real>
struct BlockParams {
  std::vector<Matrix<Real>> wq, wk, wv;  // per head, d x d
  Matrix<Real> wo;                       // (heads*d) x d
  Matrix<Real> w1, b1, w2, b2;           // d x d, 1 x d, d x d, 1 x d
  Matrix<Real> gamma_attn, beta_attn;    // 1 x d
  Matrix<Real> gamma_ffn, beta_ffn;      // 1 x d
};

template <class Real = double>
struct ModelParams {
  ModelConfig config;
  Matrix<Real> m_embed;  // (2E+1) x d, last row = padding interaction
  Matrix<Real> e_embed;  // (E+1) x d, last row = padding exercise
  Matrix<Real> p_embed;  // n x d
  std::vector<BlockParams<Real>> block;
  Matrix<Real> pred_w;   // d x 1
  Matrix<Real> pred_b;   // 1 x 1

  static ModelParams zeros_like(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.config = cfg;
    const auto e = static_cast<std::size_t>(cfg.num_exercises);
    const auto d = static_cast<std::size_t>(cfg.d);
    const auto n = static_cast<std::size_t>(cfg.n);
    p.m_embed = Matrix<Real>(2 * e + 1, d);
    p.e_embed = Matrix<Real>(e + 1, d);
    p.p_embed = Matrix<Real>(n, d);
    p.block.resize(cfg.blocks);
    for (auto& b : p.block) {
      b.wq.assign(cfg.heads, Matrix<Real>(d, d));
      b.wk.assign(cfg.heads, Matrix<Real>(d, d));
      b.wv.assign(cfg.heads, Matrix<Real>(d, d));
      b.wo = Matrix<Real>(cfg.heads * d, d);
      b.w1 = Matrix<Real>(d, d);
      b.b1 = Matrix<Real>(1, d);
      b.w2 = Matrix<Real>(d, d);
      b.b2 = Matrix<Real>(1, d);
      b.gamma_attn = Matrix<Real>(1, d);
      b.beta_attn = Matrix<Real>(1, d);
      b.gamma_ffn = Matrix<Real>(1, d);
      b.beta_ffn = Matrix<Real>(1, d);
    }
    p.pred_w = Matrix<Real>(d, 1);
    p.pred_b = Matrix<Real>(1, 1);
    return p;
  }

  // Truncated normal (std 0.05) for embeddings and weights; layer norm gains
  // start at one, all biases at zero.
  static ModelParams init(const ModelConfig& cfg, std::uint64_t seed) {
    ModelParams p = zeros_like(cfg);
    std::mt19937_64 rng(derive_seed(seed, "init"));
    auto fill_normal = [&](Matrix<Real>& m) {
      for (auto& v : m.data()) v = static_cast<Real>(truncated_normal(rng, 0.05));
    };
    fill_normal(p.m_embed);
    fill_normal(p.e_embed);
    fill_normal(p.p_embed);
    for (auto& b : p.block) {
      for (auto& w : b.wq) fill_normal(w);
      for (auto& w : b.wk) fill_normal(w);
      for (auto& w : b.wv) fill_normal(w);
      fill_normal(b.wo);
      fill_normal(b.w1);
      fill_normal(b.w2);
      b.gamma_attn.fill(Real(1));
      b.gamma_ffn.fill(Real(1));
    }
    fill_normal(p.pred_w);
    return p;
  }
};

template <class Real>
struct ParamRef {
  std::string name;
  Matrix<Real>* tensor;
};

template <class Real>
std::vector<ParamRef<Real>> param_entries(ModelParams<Real>& p) {
  std::vector<ParamRef<Real>> out;
  out.push_back({"m_embed", &p.m_embed});
  out.push_back({"e_embed", &p.e_embed});
  out.push_back({"p_embed", &p.p_embed});
  for (std::size_t b = 0; b < p.block.size(); ++b) {
    const std::string prefix = "block" + std::to_string(b) + ".";
    auto& blk = p.block[b];
    for (std::size_t h = 0; h < blk.wq.size(); ++h) {
      const std::string head = "head" + std::to_string(h) + ".";
      out.push_back({prefix + head + "wq", &blk.wq[h]});
      out.push_back({prefix + head + "wk", &blk.wk[h]});
      out.push_back({prefix + head + "wv", &blk.wv[h]});
    }
    out.push_back({prefix + "wo", &blk.wo});
    out.push_back({prefix + "w1", &blk.w1});
    out.push_back({prefix + "b1", &blk.b1});
    out.push_back({prefix + "w2", &blk.w2});
    out.push_back({prefix + "b2", &blk.b2});
    out.push_back({prefix + "gamma_attn", &blk.gamma_attn});
    out.push_back({prefix + "beta_attn", &blk.beta_attn});
    out.push_back({prefix + "gamma_ffn", &blk.gamma_ffn});
    out.push_back({prefix + "beta_ffn", &blk.beta_ffn});
  }
  out.push_back({"pred_w", &p.pred_w});
  out.push_back({"pred_b", &p.pred_b});
  return out;
}

// Inverted dropout; masks carry 0 or 1/(1-rate) and are recorded in the
// trace so backward reuses the exact forward masks.
template <class Real>
struct Dropout {
  Real rate = Real(0);
  bool train = false;
  std::mt19937_64 rng;

  static Dropout eval() { return Dropout{}; }
  static Dropout training(Real rate, std::uint64_t seed) {
    Dropout d;
    d.rate = rate;
    d.train = true;
    d.rng.seed(seed);
    return d;
  }

  Matrix<Real> sample_mask(std::size_t rows, std::size_t cols) {
    Matrix<Real> mask(rows, cols, Real(1));
    if (train && rate > Real(0)) {
      std::uniform_real_distribution<double> unif(0.0, 1.0);
      const Real keep_scale = Real(1) / (Real(1) - rate);
      for (auto& v : mask.data()) {
        v = unif(rng) < static_cast<double>(rate) ? Real(0) : keep_scale;
      }
    }
    return mask;
  }
};

template <class Real>
struct BlockTrace {
  Matrix<Real> xq, xkv;
  std::vector<Matrix<Real>> q, k, v;   // per head, n x d
  std::vector<Matrix<Real>> att;       // per head, n x n
  Matrix<Real> concat;                 // n x (heads*d)
  Matrix<Real> s;                      // n x d
  Matrix<Real> drop_attn;              // mask, n x d
  LayerNormTrace<Real> ln_attn;
  Matrix<Real> a;                      // n x d
  Matrix<Real> zpre, z;                // n x d
  Matrix<Real> ffn_out;                // n x d
  Matrix<Real> drop_ffn;               // mask, n x d
  LayerNormTrace<Real> ln_ffn;
  Matrix<Real> f;                      // n x d
};

template <class Real>
struct ForwardTrace {
  Matrix<Real> mhat, ehat;             // n x d
  std::vector<BlockTrace<Real>> blocks;
  Matrix<Real> f_final;                // n x d
  std::vector<Real> p;                 // n
};

namespace detail {

// One self-attention block: causal multi-head attention over the key/value
// stream queried by the query stream, residual + layer norm, then the feed
// forward sublayer with its own residual + layer norm.
template <class Real>
Matrix<Real> apply_block(const Matrix<Real>& xq, const Matrix<Real>& xkv,
                         const BlockParams<Real>& bp, const ModelConfig& cfg,
                         const std::vector<std::uint8_t>& valid,
                         Dropout<Real>& dropout, BlockTrace<Real>& bt) {
  const std::size_t n = xq.rows(), d = xq.cols();
  const std::size_t heads = bp.wq.size();
  const Real inv_sqrt_d = Real(1) / std::sqrt(static_cast<Real>(d));

  bt.xq = xq;
  bt.xkv = xkv;
  bt.q.resize(heads);
  bt.k.resize(heads);
  bt.v.resize(heads);
  bt.att.resize(heads);
  bt.concat = Matrix<Real>(n, heads * d);

  for (std::size_t h = 0; h < heads; ++h) {
    bt.q[h] = matmul(xq, bp.wq[h]);
    bt.k[h] = matmul(xkv, bp.wk[h]);
    bt.v[h] = matmul(xkv, bp.wv[h]);
    Matrix<Real>& att = bt.att[h];
    att = Matrix<Real>(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      if (!valid[i]) continue;  // padded query positions stay all-zero
      const Real* qi = bt.q[h].row_ptr(i);
      Real row_max = -std::numeric_limits<Real>::infinity();
      bool any = false;
      for (std::size_t j = 0; j <= i; ++j) {
        if (!valid[j]) continue;
        const Real* kj = bt.k[h].row_ptr(j);
        Real dot{};
        for (std::size_t c = 0; c < d; ++c) dot += qi[c] * kj[c];
        dot *= inv_sqrt_d;
        att(i, j) = dot;
        row_max = std::max(row_max, dot);
        any = true;
      }
      if (!any) {
        throw std::logic_error("attention: valid query at position " +
                               std::to_string(i) + " has no valid key");
      }
      Real denom{};
      for (std::size_t j = 0; j <= i; ++j) {
        if (!valid[j]) continue;
        const Real e = std::exp(att(i, j) - row_max);
        att(i, j) = e;
        denom += e;
      }
      for (std::size_t j = 0; j <= i; ++j) {
        if (valid[j]) att(i, j) /= denom;
      }
    }
    const Matrix<Real> head_out = matmul(att, bt.v[h]);
    for (std::size_t i = 0; i < n; ++i) {
      const Real* src = head_out.row_ptr(i);
      Real* dst = bt.concat.row_ptr(i) + h * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] = src[c];
    }
  }

  bt.s = matmul(bt.concat, bp.wo);
  bt.drop_attn = dropout.sample_mask(n, d);
  Matrix<Real> r1(n, d);
  for (std::size_t i = 0; i < r1.size(); ++i) {
    r1.data()[i] = bt.s.data()[i] * bt.drop_attn.data()[i] +
                   (cfg.no_residual ? Real(0) : xq.data()[i]);
  }
  bt.a = layer_norm_rows(r1, bp.gamma_attn, bp.beta_attn, &bt.ln_attn);

  bt.zpre = matmul(bt.a, bp.w1);
  for (std::size_t i = 0; i < n; ++i) {
    Real* row = bt.zpre.row_ptr(i);
    for (std::size_t c = 0; c < d; ++c) row[c] += bp.b1(0, c);
  }
  bt.z = relu(bt.zpre);
  bt.ffn_out = matmul(bt.z, bp.w2);
  for (std::size_t i = 0; i < n; ++i) {
    Real* row = bt.ffn_out.row_ptr(i);
    for (std::size_t c = 0; c < d; ++c) row[c] += bp.b2(0, c);
  }
  bt.drop_ffn = dropout.sample_mask(n, d);
  Matrix<Real> r2(n, d);
  for (std::size_t i = 0; i < r2.size(); ++i) {
    r2.data()[i] = bt.ffn_out.data()[i] * bt.drop_ffn.data()[i] +
                   (cfg.no_residual ? Real(0) : bt.a.data()[i]);
  }
  bt.f = layer_norm_rows(r2, bp.gamma_ffn, bp.beta_ffn, &bt.ln_ffn);
  return bt.f;
}

}  // namespace detail

// Embedding lookups: Mhat_i = M[s_i] + P_i (P omitted under no_pe),
// Ehat_i = E[query_i]. Positional terms are added to the interaction stream
// only.
template <class Real>
void embed(const EncodedWindow& window, const ModelParams<Real>& params,
           Matrix<Real>& mhat, Matrix<Real>& ehat) {
  const ModelConfig& cfg = params.config;
  const std::size_t n = static_cast<std::size_t>(cfg.n);
  const std::size_t d = static_cast<std::size_t>(cfg.d);
  if (window.length() != n) {
    throw std::logic_error("embed: window length " +
                           std::to_string(window.length()) +
                           " != model n " + std::to_string(cfg.n));
  }
  mhat = Matrix<Real>(n, d);
  ehat = Matrix<Real>(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    const int id = window.interaction_ids[i];
    const int qid = window.query_exercise_ids[i];
    if (id < 0 || id > 2 * cfg.num_exercises || qid < 0 ||
        qid > cfg.num_exercises) {
      throw std::logic_error("embed: id out of range for model (window/params mismatch)");
    }
    const Real* mrow = params.m_embed.row_ptr(static_cast<std::size_t>(id));
    const Real* erow = params.e_embed.row_ptr(static_cast<std::size_t>(qid));
    for (std::size_t c = 0; c < d; ++c) {
      mhat(i, c) = mrow[c] + (cfg.no_pe ? Real(0) : params.p_embed(i, c));
      ehat(i, c) = erow[c];
    }
  }
}

// Full forward pass; returns per-position probabilities (meaningful at valid
// positions). With zero blocks the interaction embedding feeds the
// prediction head directly.
template <class Real>
std::vector<Real> forward(const EncodedWindow& window,
                          const ModelParams<Real>& params,
                          Dropout<Real>& dropout, ForwardTrace<Real>& trace) {
  const ModelConfig& cfg = params.config;
  embed(window, params, trace.mhat, trace.ehat);
  trace.blocks.assign(static_cast<std::size_t>(cfg.blocks), BlockTrace<Real>{});
  if (cfg.blocks == 0) {
    trace.f_final = trace.mhat;
  } else {
    Matrix<Real> f = detail::apply_block(trace.ehat, trace.mhat, params.block[0],
                                         cfg, window.valid, dropout,
                                         trace.blocks[0]);
    for (int b = 1; b < cfg.blocks; ++b) {
      f = detail::apply_block(f, f, params.block[b], cfg, window.valid, dropout,
                              trace.blocks[b]);
    }
    trace.f_final = std::move(f);
  }
  const std::size_t n = trace.f_final.rows(), d = trace.f_final.cols();
  trace.p.assign(n, Real(0));
  for (std::size_t i = 0; i < n; ++i) {
    Real z = params.pred_b(0, 0);
    const Real* frow = trace.f_final.row_ptr(i);
    for (std::size_t c = 0; c < d; ++c) z += frow[c] * params.pred_w(c, 0);
    trace.p[i] = sigmoid(z);
  }
  return trace.p;
}

template <class Real>
std::vector<Real> forward_eval(const EncodedWindow& window,
                               const ModelParams<Real>& params,
                               ForwardTrace<Real>& trace) {
  auto dropout = Dropout<Real>::eval();
  return forward(window, params, dropout, trace);
}

inline constexpr double kProbClamp = 1e-7;

// Negative log likelihood over valid positions; probabilities are clamped
// before the logs.
template <class Real>
Real loss_sum(const std::vector<Real>& p, const std::vector<int>& targets,
              const std::vector<std::uint8_t>& valid) {
  Real total{};
  std::size_t count = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!valid[i]) continue;
    ++count;
    const Real pc = std::clamp(p[i], Real(kProbClamp), Real(1) - Real(kProbClamp));
    total -= targets[i] ? std::log(pc) : std::log(Real(1) - pc);
  }
  if (count == 0) throw std::domain_error("loss: window has no valid positions");
  return total;
}

template <class Real>
Real loss_mean(const std::vector<Real>& p, const std::vector<int>& targets,
               const std::vector<std::uint8_t>& valid) {
  std::size_t count = 0;
  for (auto v : valid) count += v;
  return loss_sum(p, targets, valid) / static_cast<Real>(count);
}

namespace detail {

template <class Real>
std::pair<Matrix<Real>, Matrix<Real>> block_backward(
    const BlockTrace<Real>& bt, const BlockParams<Real>& bp,
    const ModelConfig& cfg, BlockParams<Real>& g, const Matrix<Real>& df) {
  const std::size_t n = df.rows(), d = df.cols();
  const std::size_t heads = bp.wq.size();
  const Real inv_sqrt_d = Real(1) / std::sqrt(static_cast<Real>(d));

  // FFN sublayer.
  Matrix<Real> dr2 = layer_norm_rows_backward(df, bt.ln_ffn, bp.gamma_ffn,
                                              g.gamma_ffn, g.beta_ffn);
  Matrix<Real> dffn(n, d);
  for (std::size_t i = 0; i < dffn.size(); ++i) {
    dffn.data()[i] = dr2.data()[i] * bt.drop_ffn.data()[i];
  }
  Matrix<Real> da = cfg.no_residual ? Matrix<Real>(n, d) : dr2;

  Matrix<Real> dz = matmul_nt(dffn, bp.w2);
  add_inplace(g.w2, matmul_tn(bt.z, dffn));
  for (std::size_t i = 0; i < n; ++i) {
    const Real* row = dffn.row_ptr(i);
    for (std::size_t c = 0; c < d; ++c) g.b2(0, c) += row[c];
  }
  for (std::size_t i = 0; i < dz.size(); ++i) {
    if (bt.zpre.data()[i] <= Real(0)) dz.data()[i] = Real(0);
  }
  add_inplace(da, matmul_nt(dz, bp.w1));
  add_inplace(g.w1, matmul_tn(bt.a, dz));
  for (std::size_t i = 0; i < n; ++i) {
    const Real* row = dz.row_ptr(i);
    for (std::size_t c = 0; c < d; ++c) g.b1(0, c) += row[c];
  }

  // Attention sublayer.
  Matrix<Real> dr1 = layer_norm_rows_backward(da, bt.ln_attn, bp.gamma_attn,
                                              g.gamma_attn, g.beta_attn);
  Matrix<Real> ds(n, d);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    ds.data()[i] = dr1.data()[i] * bt.drop_attn.data()[i];
  }
  Matrix<Real> dxq = cfg.no_residual ? Matrix<Real>(n, d) : dr1;
  Matrix<Real> dxkv(n, d);

  Matrix<Real> dconcat = matmul_nt(ds, bp.wo);
  add_inplace(g.wo, matmul_tn(bt.concat, ds));

  Matrix<Real> dhead(n, d);
  for (std::size_t h = 0; h < heads; ++h) {
    for (std::size_t i = 0; i < n; ++i) {
      const Real* src = dconcat.row_ptr(i) + h * d;
      Real* dst = dhead.row_ptr(i);
      for (std::size_t c = 0; c < d; ++c) dst[c] = src[c];
    }
    Matrix<Real> datt = matmul_nt(dhead, bt.v[h]);
    Matrix<Real> dv = matmul_tn(bt.att[h], dhead);

    Matrix<Real> dlogits(n, n);
    for (std::size_t i = 0; i < n; ++i) {
      softmax_row_backward(bt.att[h].row_ptr(i), datt.row_ptr(i),
                           dlogits.row_ptr(i), n);
    }
    Matrix<Real> dq = matmul(dlogits, bt.k[h]);
    scale_inplace(dq, inv_sqrt_d);
    Matrix<Real> dk = matmul_tn(dlogits, bt.q[h]);
    scale_inplace(dk, inv_sqrt_d);

    add_inplace(g.wq[h], matmul_tn(bt.xq, dq));
    add_inplace(dxq, matmul_nt(dq, bp.wq[h]));
    add_inplace(g.wk[h], matmul_tn(bt.xkv, dk));
    add_inplace(dxkv, matmul_nt(dk, bp.wk[h]));
    add_inplace(g.wv[h], matmul_tn(bt.xkv, dv));
    add_inplace(dxkv, matmul_nt(dv, bp.wv[h]));
  }
  return {std::move(dxq), std::move(dxkv)};
}

}  // namespace detail

// Gradients of `scale * sum-loss` w.r.t. every parameter tensor. With
// scale = 1/valid_count this is the mean loss gradient.
template <class Real>
ModelParams<Real> backward_scaled(const EncodedWindow& window,
                                  const ModelParams<Real>& params,
                                  const ForwardTrace<Real>& trace, Real scale) {
  const ModelConfig& cfg = params.config;
  if (trace.f_final.rows() != static_cast<std::size_t>(cfg.n)) {
    throw std::logic_error("backward: trace/params mismatch");
  }
  const std::size_t n = trace.f_final.rows(), d = trace.f_final.cols();
  ModelParams<Real> grads = ModelParams<Real>::zeros_like(cfg);

  Matrix<Real> df(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (!window.valid[i]) continue;
    const Real p = trace.p[i];
    // The clamped loss is flat where the probability saturates.
    if (p <= Real(kProbClamp) || p >= Real(1) - Real(kProbClamp)) continue;
    const Real dz = scale * (p - static_cast<Real>(window.targets[i]));
    const Real* frow = trace.f_final.row_ptr(i);
    Real* dfrow = df.row_ptr(i);
    for (std::size_t c = 0; c < d; ++c) {
      dfrow[c] = dz * params.pred_w(c, 0);
      grads.pred_w(c, 0) += dz * frow[c];
    }
    grads.pred_b(0, 0) += dz;
  }

  Matrix<Real> dmhat, dehat;
  if (cfg.blocks == 0) {
    dmhat = std::move(df);
    dehat = Matrix<Real>(n, d);
  } else {
    Matrix<Real> dout = std::move(df);
    for (int b = cfg.blocks - 1; b >= 1; --b) {
      auto [dxq, dxkv] = detail::block_backward(trace.blocks[b], params.block[b],
                                                cfg, grads.block[b], dout);
      dout = std::move(dxq);
      add_inplace(dout, dxkv);  // both streams of an upper block share input
    }
    auto [dxq, dxkv] = detail::block_backward(trace.blocks[0], params.block[0],
                                              cfg, grads.block[0], dout);
    dehat = std::move(dxq);
    dmhat = std::move(dxkv);
  }

  for (std::size_t i = 0; i < n; ++i) {
    const auto id = static_cast<std::size_t>(window.interaction_ids[i]);
    const auto qid = static_cast<std::size_t>(window.query_exercise_ids[i]);
    Real* mrow = grads.m_embed.row_ptr(id);
    Real* erow = grads.e_embed.row_ptr(qid);
    const Real* dm = dmhat.row_ptr(i);
    const Real* de = dehat.row_ptr(i);
    for (std::size_t c = 0; c < d; ++c) {
      mrow[c] += dm[c];
      erow[c] += de[c];
      if (!cfg.no_pe) grads.p_embed(i, c) += dm[c];
    }
  }
  return grads;
}

// Gradient of the per-window mean loss.
template <class Real>
ModelParams<Real> backward(const EncodedWindow& window,
                           const ModelParams<Real>& params,
                           const ForwardTrace<Real>& trace) {
  const std::size_t count = window.valid_count();
  if (count == 0) throw std::domain_error("backward: window has no valid positions");
  return backward_scaled(window, params, trace, Real(1) / static_cast<Real>(count));
}

}  // namespace sakt

#endif  // SAKT_MODEL_HPP
