#ifndef PRISM_EMBEDDING_SCPM_HPP
#define PRISM_EMBEDDING_SCPM_HPP

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "prism/core/error.hpp"
#include "prism/core/rng.hpp"
#include "prism/embedding/layers.hpp"

namespace prism {

/// C x H x W feature map, channel-major.
struct FeatureMap {
  int c = 0, h = 0, w = 0;
  Vec v;

  FeatureMap() = default;
  FeatureMap(int channels, int height, int width, double fill = 0.0)
      : c(channels), h(height), w(width), v(static_cast<std::size_t>(channels) * height * width, fill) {}

  double& operator()(int ch, int y, int x) noexcept { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  double operator()(int ch, int y, int x) const noexcept { return v[(static_cast<std::size_t>(ch) * h + y) * w + x]; }
  std::size_t pixels() const noexcept { return static_cast<std::size_t>(h) * w; }
  bool same_shape(const FeatureMap& o) const noexcept { return c == o.c && h == o.h && w == o.w; }

  Vec pixel(std::size_t p) const {
    Vec out(static_cast<std::size_t>(c));
    for (int k = 0; k < c; ++k) out[k] = v[static_cast<std::size_t>(k) * pixels() + p];
    return out;
  }
};

/// 3x3 zero-padded convolution, weights [out][in][3][3].
struct Conv3 {
  int in = 0, out = 0;
  Vec W, b;

  Conv3() = default;
  Conv3(int in_ch, int out_ch) : in(in_ch), out(out_ch), W(static_cast<std::size_t>(in_ch) * out_ch * 9, 0.0), b(out_ch, 0.0) {}

  void init(SeededRng& rng) {
    const double r = std::sqrt(6.0 / (9.0 * (in + out)));
    for (double& w : W) w = rng.uniform(-r, r);
  }

  double weight(int o, int i, int ky, int kx) const noexcept { return W[((static_cast<std::size_t>(o) * in + i) * 3 + ky) * 3 + kx]; }

  FeatureMap forward(const FeatureMap& x) const {
    FeatureMap y(out, x.h, x.w);
    for (int o = 0; o < out; ++o)
      for (int yy = 0; yy < x.h; ++yy)
        for (int xx = 0; xx < x.w; ++xx) {
          double acc = b[o];
          for (int i = 0; i < in; ++i)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = yy + ky - 1, sx = xx + kx - 1;
                if (sy >= 0 && sy < x.h && sx >= 0 && sx < x.w) acc += weight(o, i, ky, kx) * x(i, sy, sx);
              }
          y(o, yy, xx) = acc;
        }
    return y;
  }

  /// Accumulates parameter gradients into g and adds dL/dx into dx.
  void backward(const FeatureMap& x, const FeatureMap& dy, Conv3& g, FeatureMap& dx) const {
    for (int o = 0; o < out; ++o)
      for (int yy = 0; yy < x.h; ++yy)
        for (int xx = 0; xx < x.w; ++xx) {
          const double d = dy(o, yy, xx);
          g.b[o] += d;
          for (int i = 0; i < in; ++i)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int sy = yy + ky - 1, sx = xx + kx - 1;
                if (sy < 0 || sy >= x.h || sx < 0 || sx >= x.w) continue;
                const std::size_t wi = ((static_cast<std::size_t>(o) * in + i) * 3 + ky) * 3 + kx;
                g.W[wi] += d * x(i, sy, sx);
                dx(i, sy, sx) += W[wi] * d;
              }
        }
  }

  template <class F>
  void for_each_param(const std::string& prefix, F&& f) {
    f(prefix + ".W", W, Shape{static_cast<std::uint64_t>(out), static_cast<std::uint64_t>(in), 3, 3});
    f(prefix + ".b", b, Shape{static_cast<std::uint64_t>(out)});
  }
};

struct ScpmConfig {
  int enc_channels = 8;
  int dec_channels = 8;
  std::size_t mlp_hidden = 16;
  std::size_t attn_dim = 8;
  bool instance_norm = true;
};

/// f_refined = gamma(f_enc) * Norm(f_dec) + beta(f_enc), followed by a residual
/// conv block, single-head self-attention over pixels and nearest x2 upsampling.
class Scpm {
 public:
  struct Cache {
    FeatureMap enc, dec, normed, modulated, a1, r, s;
    std::vector<Vec> gh, bh;  // per-pixel MLP hidden activations
    FeatureMap gamma, beta;
    std::vector<double> inv_std;
    std::vector<Vec> q, k, vv, att, o;
  };

  Scpm() = default;

  /// identity=true: gamma=1, beta=0 and both residual branches start at zero.
  Scpm(const ScpmConfig& cfg, std::uint64_t seed, bool identity = true) : cfg_(cfg) {
    detail::require(cfg.enc_channels >= 1 && cfg.dec_channels >= 1 && cfg.mlp_hidden >= 1 && cfg.attn_dim >= 1,
                    "Scpm: bad configuration");
    const auto ce = static_cast<std::size_t>(cfg.enc_channels), cd = static_cast<std::size_t>(cfg.dec_channels);
    g1_ = Dense(ce, cfg.mlp_hidden);
    g2_ = Dense(cfg.mlp_hidden, cd);
    b1_ = Dense(ce, cfg.mlp_hidden);
    b2_ = Dense(cfg.mlp_hidden, cd);
    c1_ = Conv3(cfg.dec_channels, cfg.dec_channels);
    c2_ = Conv3(cfg.dec_channels, cfg.dec_channels);
    wq_ = Dense(cd, cfg.attn_dim);
    wk_ = Dense(cd, cfg.attn_dim);
    wv_ = Dense(cd, cfg.attn_dim);
    wo_ = Dense(cfg.attn_dim, cd);
    SeededRng rng(seed);
    for (Dense* d : {&g1_, &g2_, &b1_, &b2_, &wq_, &wk_, &wv_, &wo_}) d->init(rng);
    c1_.init(rng);
    c2_.init(rng);
    if (identity) {
      std::fill(g2_.W.begin(), g2_.W.end(), 0.0);
      std::fill(g2_.b.begin(), g2_.b.end(), 1.0);
      std::fill(b2_.W.begin(), b2_.W.end(), 0.0);
      std::fill(b2_.b.begin(), b2_.b.end(), 0.0);
      std::fill(c2_.W.begin(), c2_.W.end(), 0.0);
      std::fill(wo_.W.begin(), wo_.W.end(), 0.0);
    }
  }

  const ScpmConfig& config() const noexcept { return cfg_; }

  Scpm zeros_like() const {
    Scpm g;
    g.cfg_ = cfg_;
    g.g1_ = Dense(g1_.in, g1_.out);
    g.g2_ = Dense(g2_.in, g2_.out);
    g.b1_ = Dense(b1_.in, b1_.out);
    g.b2_ = Dense(b2_.in, b2_.out);
    g.c1_ = Conv3(c1_.in, c1_.out);
    g.c2_ = Conv3(c2_.in, c2_.out);
    g.wq_ = Dense(wq_.in, wq_.out);
    g.wk_ = Dense(wk_.in, wk_.out);
    g.wv_ = Dense(wv_.in, wv_.out);
    g.wo_ = Dense(wo_.in, wo_.out);
    return g;
  }

  Cache forward(const FeatureMap& f_enc, const FeatureMap& f_dec) const {
    if (f_enc.c != cfg_.enc_channels || f_dec.c != cfg_.dec_channels)
      throw InvalidArgument("scpm_fuse: channel mismatch (enc " + std::to_string(f_enc.c) + ", dec " +
                            std::to_string(f_dec.c) + ")");
    if (f_enc.h != f_dec.h || f_enc.w != f_dec.w) throw InvalidArgument("scpm_fuse: spatial size mismatch");
    detail::require(f_dec.h >= 1 && f_dec.w >= 1, "scpm_fuse: empty feature map");
    Cache c;
    c.enc = f_enc;
    c.dec = f_dec;
    const int C = f_dec.c;
    const std::size_t P = f_dec.pixels();

    c.normed = f_dec;
    c.inv_std.assign(static_cast<std::size_t>(C), 1.0);
    if (cfg_.instance_norm) {
      for (int ch = 0; ch < C; ++ch) {
        double mu = 0.0, var = 0.0;
        for (std::size_t p = 0; p < P; ++p) mu += f_dec.v[ch * P + p];
        mu /= static_cast<double>(P);
        for (std::size_t p = 0; p < P; ++p) var += (f_dec.v[ch * P + p] - mu) * (f_dec.v[ch * P + p] - mu);
        var /= static_cast<double>(P);
        c.inv_std[ch] = 1.0 / std::sqrt(var + kNormEps);
        for (std::size_t p = 0; p < P; ++p) c.normed.v[ch * P + p] = (f_dec.v[ch * P + p] - mu) * c.inv_std[ch];
      }
    }

    c.gamma = FeatureMap(C, f_dec.h, f_dec.w);
    c.beta = FeatureMap(C, f_dec.h, f_dec.w);
    c.modulated = FeatureMap(C, f_dec.h, f_dec.w);
    c.gh.resize(P);
    c.bh.resize(P);
    for (std::size_t p = 0; p < P; ++p) {
      const Vec e = f_enc.pixel(p);
      c.gh[p] = g1_(e);
      tanh_inplace(c.gh[p]);
      c.bh[p] = b1_(e);
      tanh_inplace(c.bh[p]);
      const Vec gm = g2_(c.gh[p]), bt = b2_(c.bh[p]);
      for (int ch = 0; ch < C; ++ch) {
        c.gamma.v[ch * P + p] = gm[ch];
        c.beta.v[ch * P + p] = bt[ch];
        c.modulated.v[ch * P + p] = gm[ch] * c.normed.v[ch * P + p] + bt[ch];
      }
    }

    c.a1 = c1_.forward(c.modulated);
    tanh_inplace(c.a1.v);
    c.r = c2_.forward(c.a1);
    for (std::size_t i = 0; i < c.r.v.size(); ++i) c.r.v[i] += c.modulated.v[i];

    const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.attn_dim));
    c.q.resize(P);
    c.k.resize(P);
    c.vv.resize(P);
    for (std::size_t p = 0; p < P; ++p) {
      const Vec t = c.r.pixel(p);
      c.q[p] = wq_(t);
      c.k[p] = wk_(t);
      c.vv[p] = wv_(t);
    }
    c.att.assign(P, Vec(P));
    c.o.assign(P, Vec(cfg_.attn_dim, 0.0));
    c.s = c.r;
    for (std::size_t p = 0; p < P; ++p) {
      double mx = -1e300;
      for (std::size_t p2 = 0; p2 < P; ++p2) {
        double d = 0.0;
        for (std::size_t a = 0; a < cfg_.attn_dim; ++a) d += c.q[p][a] * c.k[p2][a];
        c.att[p][p2] = d * scale;
        mx = std::max(mx, c.att[p][p2]);
      }
      double z = 0.0;
      for (double& a : c.att[p]) z += (a = std::exp(a - mx));
      for (std::size_t p2 = 0; p2 < P; ++p2) {
        c.att[p][p2] /= z;
        for (std::size_t a = 0; a < cfg_.attn_dim; ++a) c.o[p][a] += c.att[p][p2] * c.vv[p2][a];
      }
      const Vec proj = wo_(c.o[p]);
      for (int ch = 0; ch < C; ++ch) c.s.v[ch * P + p] += proj[ch];
    }
    return c;
  }

  FeatureMap output(const Cache& c) const { return upsample2(c.s); }

  FeatureMap operator()(const FeatureMap& f_enc, const FeatureMap& f_dec) const { return output(forward(f_enc, f_dec)); }

  /// Accumulates parameter gradients into g given dL/d(output); fills d_enc and d_dec when non-null.
  void backward(const Cache& c, const FeatureMap& d_out, Scpm& g, FeatureMap* d_enc = nullptr,
                FeatureMap* d_dec = nullptr) const {
    const int C = c.s.c, H = c.s.h, W = c.s.w;
    detail::require(d_out.c == C && d_out.h == 2 * H && d_out.w == 2 * W, "Scpm::backward: gradient shape mismatch");
    const std::size_t P = c.s.pixels(), A = cfg_.attn_dim;
    const double scale = 1.0 / std::sqrt(static_cast<double>(A));

    FeatureMap ds(C, H, W);
    for (int ch = 0; ch < C; ++ch)
      for (int y = 0; y < 2 * H; ++y)
        for (int x = 0; x < 2 * W; ++x) ds(ch, y / 2, x / 2) += d_out(ch, y, x);

    // Attention.
    FeatureMap dr = ds;
    std::vector<Vec> dq(P, Vec(A, 0.0)), dk(P, Vec(A, 0.0)), dv(P, Vec(A, 0.0));
    Vec dsp(static_cast<std::size_t>(C)), dop(A), dA(P);
    for (std::size_t p = 0; p < P; ++p) {
      for (int ch = 0; ch < C; ++ch) dsp[ch] = ds.v[ch * P + p];
      wo_.backward(c.o[p], dsp, g.wo_, dop);
      double inner = 0.0;
      for (std::size_t p2 = 0; p2 < P; ++p2) {
        double d = 0.0;
        for (std::size_t a = 0; a < A; ++a) {
          d += dop[a] * c.vv[p2][a];
          dv[p2][a] += c.att[p][p2] * dop[a];
        }
        dA[p2] = d;
        inner += c.att[p][p2] * d;
      }
      for (std::size_t p2 = 0; p2 < P; ++p2) {
        const double dS = c.att[p][p2] * (dA[p2] - inner) * scale;
        for (std::size_t a = 0; a < A; ++a) {
          dq[p][a] += dS * c.k[p2][a];
          dk[p2][a] += dS * c.q[p][a];
        }
      }
    }
    Vec dt(static_cast<std::size_t>(C));
    for (std::size_t p = 0; p < P; ++p) {
      const Vec t = c.r.pixel(p);
      for (auto [layer, grad, dy] : {std::tuple{&wq_, &g.wq_, &dq[p]}, std::tuple{&wk_, &g.wk_, &dk[p]},
                                     std::tuple{&wv_, &g.wv_, &dv[p]}}) {
        layer->backward(t, *dy, *grad, dt);
        for (int ch = 0; ch < C; ++ch) dr.v[ch * P + p] += dt[ch];
      }
    }

    // Residual block.
    FeatureMap dm = dr, da1(C, H, W);
    c2_.backward(c.a1, dr, g.c2_, da1);
    for (std::size_t i = 0; i < da1.v.size(); ++i) da1.v[i] *= 1.0 - c.a1.v[i] * c.a1.v[i];
    c1_.backward(c.modulated, da1, g.c1_, dm);

    // Modulation and the gamma/beta MLPs.
    FeatureMap dn(C, H, W);
    Vec dgm(static_cast<std::size_t>(C)), dbt(static_cast<std::size_t>(C));
    Vec dgh(cfg_.mlp_hidden), dbh(cfg_.mlp_hidden), de1(static_cast<std::size_t>(c.enc.c)),
        de2(static_cast<std::size_t>(c.enc.c));
    if (d_enc) *d_enc = FeatureMap(c.enc.c, H, W);
    for (std::size_t p = 0; p < P; ++p) {
      for (int ch = 0; ch < C; ++ch) {
        const double d = dm.v[ch * P + p];
        dgm[ch] = d * c.normed.v[ch * P + p];
        dbt[ch] = d;
        dn.v[ch * P + p] = d * c.gamma.v[ch * P + p];
      }
      const Vec e = c.enc.pixel(p);
      g2_.backward(c.gh[p], dgm, g.g2_, dgh);
      tanh_backward(c.gh[p], dgh);
      g1_.backward(e, dgh, g.g1_, de1);
      b2_.backward(c.bh[p], dbt, g.b2_, dbh);
      tanh_backward(c.bh[p], dbh);
      b1_.backward(e, dbh, g.b1_, de2);
      if (d_enc)
        for (int ch = 0; ch < c.enc.c; ++ch) d_enc->v[ch * P + p] = de1[ch] + de2[ch];
    }

    if (d_dec) {
      *d_dec = dn;
      if (cfg_.instance_norm) {
        for (int ch = 0; ch < C; ++ch) {
          double mdn = 0.0, mdnn = 0.0;
          for (std::size_t p = 0; p < P; ++p) {
            mdn += dn.v[ch * P + p];
            mdnn += dn.v[ch * P + p] * c.normed.v[ch * P + p];
          }
          mdn /= static_cast<double>(P);
          mdnn /= static_cast<double>(P);
          for (std::size_t p = 0; p < P; ++p)
            d_dec->v[ch * P + p] = c.inv_std[ch] * (dn.v[ch * P + p] - mdn - c.normed.v[ch * P + p] * mdnn);
        }
      }
    }
  }

  template <class F>
  void for_each_param(const std::string& prefix, F&& f) {
    g1_.for_each_param(prefix + ".gamma.l1", f);
    g2_.for_each_param(prefix + ".gamma.l2", f);
    b1_.for_each_param(prefix + ".beta.l1", f);
    b2_.for_each_param(prefix + ".beta.l2", f);
    c1_.for_each_param(prefix + ".res.c1", f);
    c2_.for_each_param(prefix + ".res.c2", f);
    wq_.for_each_param(prefix + ".attn.q", f);
    // The key bias shifts every score of a query equally and cancels in the softmax; it stays zero.
    f(prefix + ".attn.k.W", wk_.W, Shape{wk_.out, wk_.in});
    wv_.for_each_param(prefix + ".attn.v", f);
    wo_.for_each_param(prefix + ".attn.o", f);
  }

  Dense& gamma_layer(int i) { return i == 0 ? g1_ : g2_; }
  Dense& beta_layer(int i) { return i == 0 ? b1_ : b2_; }

  static FeatureMap upsample2(const FeatureMap& x) {
    FeatureMap y(x.c, 2 * x.h, 2 * x.w);
    for (int ch = 0; ch < x.c; ++ch)
      for (int yy = 0; yy < y.h; ++yy)
        for (int xx = 0; xx < y.w; ++xx) y(ch, yy, xx) = x(ch, yy / 2, xx / 2);
    return y;
  }

 private:
  static constexpr double kNormEps = 1e-5;
  ScpmConfig cfg_;
  Dense g1_, g2_, b1_, b2_;
  Conv3 c1_, c2_;
  Dense wq_, wk_, wv_, wo_;
};

/// f_refined for one pair of maps.
inline FeatureMap scpm_fuse(const FeatureMap& f_enc, const FeatureMap& f_dec, const Scpm& params) {
  return params(f_enc, f_dec);
}

}  // namespace prism

#endif
