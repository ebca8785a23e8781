#include "nplab/numerics/mlp.hpp"

#include <cmath>
#include <string>

#include "nplab/errors.hpp"

namespace nplab {

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
  return n;
}

void MlpParams::validate() const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const Layer& l = layers[i];
    if (l.bias.size() != l.weight.rows())
      throw DimensionError("layer " + std::to_string(i) + ": bias length differs from output dimension");
    if (i > 0 && layers[i - 1].output_dim() != l.input_dim())
      throw DimensionError("layer " + std::to_string(i) + ": input dimension does not match previous output");
    if (l.activation.kind == ActivationKind::leaky_relu && !(l.activation.slope > 0.0 && l.activation.slope <= 1.0))
      throw ContractError("layer " + std::to_string(i) + ": leaky-relu slope must lie in (0, 1]");
  }
}

MlpParams make_mlp(std::span<const int> widths, Rng& rng, double slope) {
  if (widths.size() < 2) throw ContractError("make_mlp: need at least input and output widths");
  MlpParams p;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const int in = widths[i], out = widths[i + 1];
    if (in <= 0 || out <= 0) throw ContractError("make_mlp: widths must be positive");
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    Layer layer;
    layer.weight.resize(out, in);
    layer.bias.resize(out);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) layer.weight(r, c) = rng.uniform(-bound, bound);
    for (Index r = 0; r < out; ++r) layer.bias[r] = rng.uniform(-bound, bound);
    layer.activation = i + 2 < widths.size() ? Activation::leaky(slope) : Activation::identity();
    p.layers.push_back(std::move(layer));
  }
  return p;
}

MlpParams zeros_like(const MlpParams& p) {
  MlpParams z = p;
  for (Layer& l : z.layers) {
    l.weight.setZero();
    l.bias.setZero();
  }
  return z;
}

Vector mlp_forward(const MlpParams& params, const Vector& x) {
  if (params.layers.empty()) return x;
  if (x.size() != params.input_dim())
    throw DimensionError("mlp_forward: input has " + std::to_string(x.size()) + " entries, network expects " +
                         std::to_string(params.input_dim()));
  Vector h = x;
  for (const Layer& l : params.layers) {
    Vector a = l.weight * h + l.bias;
    for (Index i = 0; i < a.size(); ++i) a[i] = l.activation.apply(a[i]);
    h = std::move(a);
  }
  return h;
}

Matrix mlp_forward_rows(const MlpParams& params, const Matrix& xs) {
  if (params.layers.empty()) return xs;
  if (xs.cols() != params.input_dim()) throw DimensionError("mlp_forward_rows: input dimension mismatch");
  Matrix h = xs;
  for (const Layer& l : params.layers) {
    Matrix a(h.rows(), l.weight.rows());
    // One product per row: a blocked GEMM may round a row differently depending
    // on how many rows share the call.
    for (Index i = 0; i < h.rows(); ++i) a.row(i).noalias() = h.row(i) * l.weight.transpose();
    a.rowwise() += l.bias.transpose();
    if (l.activation.kind == ActivationKind::leaky_relu) a = a.unaryExpr([&](double v) { return l.activation.apply(v); });
    h = std::move(a);
  }
  return h;
}

BoundMlp bind(ad::Tape& tape, const MlpParams& params, bool trainable) {
  BoundMlp net;
  net.layers.reserve(params.layers.size());
  for (const Layer& l : params.layers) {
    Matrix b = l.bias;  // column
    if (trainable) {
      net.layers.push_back({tape.parameter(l.weight), tape.parameter(std::move(b)), l.activation});
    } else {
      net.layers.push_back({tape.constant(l.weight), tape.constant(std::move(b)), l.activation});
    }
  }
  return net;
}

ad::Var forward(const BoundMlp& net, ad::Var xs) {
  ad::Var h = xs;
  for (const BoundLayer& l : net.layers) {
    h = ad::linear(h, l.weight, l.bias);
    if (l.activation.kind == ActivationKind::leaky_relu) h = ad::leaky_relu(h, l.activation.slope);
  }
  return h;
}

MlpParams gradients(const ad::Tape& tape, const BoundMlp& net) {
  MlpParams g;
  for (const BoundLayer& l : net.layers) {
    Layer layer;
    layer.weight = tape.grad(l.weight);
    layer.bias = tape.grad(l.bias).col(0);
    layer.activation = l.activation;
    g.layers.push_back(std::move(layer));
  }
  return g;
}

}  // namespace nplab
