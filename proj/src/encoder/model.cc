// src/encoder/model.cc

#include "sfl/encoder/model.h"

namespace sfl {
namespace {

template <typename Real>
LinearWeights<Real> MakeLinear(Rng &rng, std::size_t in, std::size_t out) {
  return {XavierUniform<Real>(rng, Shape{in, out}, in, out),
          Tensor<Real>(Shape{out})};
}

template <typename Real>
NormWeights<Real> MakeNorm(std::size_t d) {
  return {Tensor<Real>(Shape{d}, Real(1)), Tensor<Real>(Shape{d})};
}

template <typename Real>
FeedForwardWeights<Real> MakeFeedForward(Rng &rng, const EncoderConfig &c) {
  return {MakeNorm<Real>(c.d_model), MakeLinear<Real>(rng, c.d_model, c.ffn_dim),
          MakeLinear<Real>(rng, c.ffn_dim, c.d_model)};
}

template <typename Real>
ConvModuleWeights<Real> MakeConvModule(Rng &rng, const EncoderConfig &c) {
  const std::size_t d = c.d_model, k = c.conv_kernel;
  ConvModuleWeights<Real> m;
  m.norm = MakeNorm<Real>(d);
  m.pointwise_in = MakeLinear<Real>(rng, d, 2 * d);
  m.depthwise_kernel = XavierUniform<Real>(rng, Shape{d, k}, k, k);
  m.depthwise_bias = Tensor<Real>(Shape{d});
  m.depthwise_norm = MakeNorm<Real>(d);
  m.pointwise_out = MakeLinear<Real>(rng, d, d);
  return m;
}

template <typename Real, typename Fn>
void VisitLinear(const std::string &name, LinearWeights<Real> &l, Fn &fn) {
  fn(name + ".weight", l.weight);
  fn(name + ".bias", l.bias);
}

template <typename Real, typename Fn>
void VisitNorm(const std::string &name, NormWeights<Real> &n, Fn &fn) {
  fn(name + ".gamma", n.gamma);
  fn(name + ".beta", n.beta);
}

template <typename Real, typename Fn>
void VisitFeedForward(const std::string &name, FeedForwardWeights<Real> &f,
                      Fn &fn) {
  VisitNorm(name + ".norm", f.norm, fn);
  VisitLinear(name + ".up", f.up, fn);
  VisitLinear(name + ".down", f.down, fn);
}

template <typename Real, typename Fn>
void VisitModel(EncoderModel<Real> &m, Fn &fn) {
  VisitLinear("subsample.conv1", m.subsampling.conv1, fn);
  VisitLinear("subsample.conv2", m.subsampling.conv2, fn);
  VisitLinear("subsample.proj", m.subsampling.proj, fn);
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    auto &b = m.blocks[i];
    const std::string p = "blocks." + std::to_string(i);
    VisitFeedForward(p + ".ffn1", b.ffn1, fn);
    if (auto *a = std::get_if<MhsaWeights<Real>>(&b.middle)) {
      VisitNorm(p + ".attn.norm", b.middle_norm, fn);
      fn(p + ".attn.w_q", a->w_q);
      fn(p + ".attn.w_k", a->w_k);
      fn(p + ".attn.w_v", a->w_v);
      fn(p + ".attn.w_o", a->w_o);
      fn(p + ".attn.w_pos", a->w_pos);
      fn(p + ".attn.u_bias", a->u_bias);
      fn(p + ".attn.v_bias", a->v_bias);
    } else if (auto *d = std::get_if<DeformModuleWeights<Real>>(&b.middle)) {
      VisitNorm(p + ".deform.norm", b.middle_norm, fn);
      fn(p + ".deform.output_kernel", d->conv.output_kernel);
      fn(p + ".deform.output_bias", d->conv.output_bias);
      fn(p + ".deform.offset_kernel", d->conv.offset_kernel);
      fn(p + ".deform.offset_bias", d->conv.offset_bias);
      fn(p + ".deform.out_norm.gamma", d->norm_gamma);
      fn(p + ".deform.out_norm.beta", d->norm_beta);
    }
    VisitNorm(p + ".conv.norm", b.conv.norm, fn);
    VisitLinear(p + ".conv.pointwise_in", b.conv.pointwise_in, fn);
    fn(p + ".conv.depthwise_kernel", b.conv.depthwise_kernel);
    fn(p + ".conv.depthwise_bias", b.conv.depthwise_bias);
    VisitNorm(p + ".conv.depthwise_norm", b.conv.depthwise_norm, fn);
    VisitLinear(p + ".conv.pointwise_out", b.conv.pointwise_out, fn);
    VisitFeedForward(p + ".ffn2", b.ffn2, fn);
    VisitNorm(p + ".final_norm", b.final_norm, fn);
  }
}

}  // namespace

template <typename Real>
Variant ConformerBlock<Real>::variant() const {
  switch (middle.index()) {
    case 1:
      return Variant::kBaseline;
    case 2:
      return Variant::kSoft;
    default:
      return Variant::kHard;
  }
}

template <typename Real>
EncoderModel<Real> EncoderModel<Real>::Init(const EncoderConfig &config,
                                            std::uint64_t seed) {
  config.Validate();
  Rng rng(seed);
  const std::size_t d = config.d_model;
  EncoderModel m;
  m.config = config;
  m.subsampling.conv1 = MakeLinear<Real>(rng, 2 * config.feature_dim, d);
  m.subsampling.conv2 = MakeLinear<Real>(rng, 2 * d, d);
  m.subsampling.proj = MakeLinear<Real>(rng, d, d);
  m.blocks.reserve(config.layers);
  for (std::size_t l = 0; l < config.layers; ++l) {
    ConformerBlock<Real> b;
    b.ffn1 = MakeFeedForward<Real>(rng, config);
    switch (config.variant) {
      case Variant::kBaseline:
        b.middle_norm = MakeNorm<Real>(d);
        b.middle = MhsaWeights<Real>::Random(rng, d, config.heads);
        break;
      case Variant::kSoft:
        b.middle_norm = MakeNorm<Real>(d);
        b.middle = DeformModuleWeights<Real>::Random(
            rng, d, config.deform_kernel, config.deform_groups);
        break;
      case Variant::kHard:
        break;
    }
    b.conv = MakeConvModule<Real>(rng, config);
    b.ffn2 = MakeFeedForward<Real>(rng, config);
    b.final_norm = MakeNorm<Real>(d);
    m.blocks.push_back(std::move(b));
  }
  return m;
}

template <typename Real>
void EncoderModel<Real>::ForEachTensor(
    const std::function<void(const std::string &, Tensor<Real> &)> &fn) {
  VisitModel(*this, fn);
}

template <typename Real>
void EncoderModel<Real>::ForEachTensor(
    const std::function<void(const std::string &, const Tensor<Real> &)> &fn)
    const {
  auto &self = const_cast<EncoderModel &>(*this);
  auto adapter = [&](const std::string &name, Tensor<Real> &t) { fn(name, t); };
  VisitModel(self, adapter);
}

template <typename Real>
std::size_t EncoderModel<Real>::ParameterCount() const {
  std::size_t n = 0;
  ForEachTensor([&](const std::string &, const Tensor<Real> &t) {
    n += t.size();
  });
  return n;
}

template struct ConformerBlock<float>;
template struct ConformerBlock<double>;
template struct EncoderModel<float>;
template struct EncoderModel<double>;

}  // namespace sfl
