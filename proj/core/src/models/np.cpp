#include "nplab/models/np.hpp"

#include "internal.hpp"
#include "nplab/errors.hpp"

namespace nplab::models {
namespace {

Matrix query_y(const BatchLayout& layout) {
  Matrix y(static_cast<Index>(layout.query_rows.size()), layout.y.cols());
  for (std::size_t i = 0; i < layout.query_rows.size(); ++i) y.row(static_cast<Index>(i)) = layout.y.row(layout.query_rows[i]);
  return y;
}

ad::Var query_x(ad::Tape& tape, const BatchLayout& layout) {
  return ad::gather_rows(tape.constant(layout.x), layout.query_rows);
}

ad::Var context_summary(const BoundMlp& enc, ad::Tape& tape, const BatchLayout& layout) {
  return ad::segment_mean(forward(enc, tape.constant(detail::xy_rows(layout))), layout.context_segments());
}

Matrix decode_rows(const MlpParams& decoder, const Matrix& in, Matrix& log_var) {
  const Matrix out = mlp_forward_rows(decoder, in);
  const Index dy = out.cols() / 2;
  log_var = out.rightCols(dy).cwiseMax(kMinLogVar).cwiseMin(kMaxLogVar);
  return out.leftCols(dy);
}

// Mean-pooled encoding of the context set (canonical order).
Matrix pooled(const MlpParams& enc, const BatchLayout& layout) {
  ad::Tape tape;
  const BoundMlp b = bind(tape, enc, false);
  const std::vector<int>& ctx = layout.tasks.front().context;
  std::vector<std::vector<int>> whole(1);
  for (std::size_t i = 0; i < ctx.size(); ++i) whole[0].push_back(static_cast<int>(i));
  const ad::Var xy = ad::gather_rows(tape.constant(detail::xy_rows(layout)), ctx);
  return ad::segment_mean(forward(b, xy), whole).value();
}

Matrix query_x_values(const BatchLayout& layout) {
  Matrix x(static_cast<Index>(layout.query_rows.size()), layout.x.cols());
  for (std::size_t i = 0; i < layout.query_rows.size(); ++i) x.row(static_cast<Index>(i)) = layout.x.row(layout.query_rows[i]);
  return x;
}

}  // namespace

std::vector<MutableNet> CnpParams::nets() { return {{"encoder", &encoder, false}, {"decoder", &decoder, false}}; }

std::vector<ConstNet> CnpParams::nets() const { return {{"encoder", &encoder, false}, {"decoder", &decoder, false}}; }

std::vector<MutableNet> NpParams::nets() {
  return {{"det_encoder", &det_encoder, false},
          {"latent_encoder", &latent_encoder, false},
          {"latent_head", &latent_head, false},
          {"decoder", &decoder, false}};
}

std::vector<ConstNet> NpParams::nets() const {
  return {{"det_encoder", &det_encoder, false},
          {"latent_encoder", &latent_encoder, false},
          {"latent_head", &latent_head, false},
          {"decoder", &decoder, false}};
}

CnpParams make_cnp(const ModelDims& d, Rng& rng, double slope) {
  d.validate();
  const int enc[] = {d.x + d.y, d.h, d.h, d.z};
  const int dec[] = {d.z + d.x, d.h, d.h, 2 * d.y};
  CnpParams p;
  p.encoder = make_mlp(enc, rng, slope);
  p.decoder = make_mlp(dec, rng, slope);
  return p;
}

NpParams make_np(const ModelDims& d, Rng& rng, double slope) {
  d.validate();
  const int enc[] = {d.x + d.y, d.h, d.h, d.z};
  const int head[] = {d.z, 2 * d.z};
  const int dec[] = {2 * d.z + d.x, d.h, d.h, 2 * d.y};
  NpParams p;
  p.det_encoder = make_mlp(enc, rng, slope);
  p.latent_encoder = make_mlp(enc, rng, slope);
  p.latent_head = make_mlp(head, rng, slope);
  p.decoder = make_mlp(dec, rng, slope);
  return p;
}

BoundCnp bind(ad::Tape& tape, const CnpParams& p, bool trainable) {
  return {bind(tape, p.encoder, trainable), bind(tape, p.decoder, trainable)};
}

BoundNp bind(ad::Tape& tape, const NpParams& p, bool trainable) {
  return {bind(tape, p.det_encoder, trainable), bind(tape, p.latent_encoder, trainable),
          bind(tape, p.latent_head, trainable), bind(tape, p.decoder, trainable)};
}

LossTerms cnp_loss(const BoundCnp& net, const BatchLayout& layout) {
  ad::Tape& tape = *net.decoder.layers.front().weight.tape();
  const ad::Var r = context_summary(net.encoder, tape, layout);
  const ad::Var in[] = {detail::per_query(r, layout), query_x(tape, layout)};
  const GaussianRows pred = split_gaussian(forward(net.decoder, ad::concat_cols(in)));
  const ad::Var ll = ad::weighted_sum(ad::gaussian_log_prob_rows(query_y(layout), pred.mean, pred.log_var),
                                      layout.query_weight);
  LossTerms out;
  out.loss = ad::scale(ll, -1.0);
  out.recon = -ll.scalar();
  return out;
}

LossTerms np_loss(const BoundNp& net, const BatchLayout& layout, const Matrix& noise) {
  ad::Tape& tape = *net.decoder.layers.front().weight.tape();
  const Index dz = net.latent_head.layers.back().weight.value().rows() / 2;
  if (noise.rows() != static_cast<Index>(layout.task_count()) || noise.cols() != dz)
    throw DimensionError("np_loss: noise shape does not match the layout");
  const ad::Var r = context_summary(net.det_encoder, tape, layout);
  const ad::Var lat = forward(net.latent_encoder, tape.constant(detail::xy_rows(layout)));
  const GaussianRows prior = split_gaussian(forward(net.latent_head, ad::segment_mean(lat, layout.context_segments())));
  const GaussianRows post = split_gaussian(forward(net.latent_head, ad::segment_mean(lat, layout.target_segments())));
  const ad::Var z = ad::reparameterize(post.mean, post.log_var, noise);

  const ad::Var in[] = {detail::per_query(z, layout), detail::per_query(r, layout), query_x(tape, layout)};
  const GaussianRows pred = split_gaussian(forward(net.decoder, ad::concat_cols(in)));
  const ad::Var ll = ad::weighted_sum(ad::gaussian_log_prob_rows(query_y(layout), pred.mean, pred.log_var),
                                      layout.query_weight);
  const ad::Var kl =
      ad::weighted_sum(ad::kl_diag_rows(post.mean, post.log_var, prior.mean, prior.log_var), detail::task_weights(layout));
  LossTerms out;
  out.loss = ad::sub(kl, ll);
  out.recon = -ll.scalar();
  out.kl_global = kl.scalar();
  return out;
}

ElboReport np_elbo(const NpParams& p, const taskgen::Task& task, Rng& rng) {
  const taskgen::Task one[] = {task};
  const BatchLayout layout = make_training_layout(one);
  ad::Tape tape;
  const LossTerms t = np_loss(bind(tape, p, false), layout, rng.normal_matrix(1, p.latent_head.input_dim()));
  return {t.loss.scalar(), t.recon, t.kl_global, 0.0};
}

PredictiveSet cnp_predict(const CnpParams& p, std::span<const Vector> x_context, std::span<const Vector> y_context,
                          std::span<const Vector> x_star) {
  if (x_star.empty()) return {};
  const BatchLayout layout = make_query_layout(x_context, y_context, x_star);
  const Matrix r = pooled(p.encoder, layout);
  const Matrix xq = query_x_values(layout);
  Matrix in(xq.rows(), r.cols() + xq.cols());
  in << r.replicate(xq.rows(), 1), xq;
  Matrix lv;
  const Matrix mean = decode_rows(p.decoder, in, lv);
  return detail::to_predictive(mean, lv, x_star.size(), 1);
}

PredictiveSet np_predict(const NpParams& p, std::span<const Vector> x_context, std::span<const Vector> y_context,
                         std::span<const Vector> x_star, const Matrix& noise) {
  const Index S = noise.rows();
  const Index dz = p.latent_head.input_dim();
  if (S < 1 || noise.cols() != dz) throw DimensionError("np_predict: noise shape does not match the model");
  if (x_star.empty()) return {};
  const BatchLayout layout = make_query_layout(x_context, y_context, x_star);
  const Matrix r = pooled(p.det_encoder, layout);
  const Matrix s = pooled(p.latent_encoder, layout);
  const Matrix head = mlp_forward_rows(p.latent_head, s);
  const Matrix lv_prior = head.rightCols(dz).cwiseMax(kMinLogVar).cwiseMin(kMaxLogVar);
  const Matrix z = detail::sample_rows(head.leftCols(dz).replicate(S, 1), lv_prior.replicate(S, 1), noise);

  const Matrix xq = query_x_values(layout);
  const Index n = xq.rows();
  Matrix in(n * S, 2 * dz + xq.cols());
  in << detail::tile_rows(z, n), r.replicate(n * S, 1), detail::repeat_rows(xq, S);
  Matrix lv;
  const Matrix mean = decode_rows(p.decoder, in, lv);
  return detail::to_predictive(mean, lv, x_star.size(), S);
}

PredictiveSet np_predict(const NpParams& p, std::span<const Vector> x_context, std::span<const Vector> y_context,
                         std::span<const Vector> x_star, Index samples, Rng& rng) {
  if (samples < 1) throw ContractError("prediction needs at least one sample");
  return np_predict(p, x_context, y_context, x_star, rng.normal_matrix(samples, p.latent_head.input_dim()));
}

}  // namespace nplab::models
