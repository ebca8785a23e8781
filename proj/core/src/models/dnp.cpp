#include "nplab/models/dnp.hpp"

#include "internal.hpp"
#include "nplab/errors.hpp"

namespace nplab::models {

std::vector<MutableNet> DnpParams::nets() {
  return {{"global_encoder", &global_encoder, false},     {"global_prior_head", &global_prior_head, false},
          {"global_posterior_head", &global_posterior_head, false}, {"local_backbone", &local_backbone, true},
          {"embed_head", &embed_head, true},              {"local_param_head", &local_param_head, false},
          {"decoder", &decoder, false}};
}

std::vector<ConstNet> DnpParams::nets() const {
  std::vector<ConstNet> out;
  for (const MutableNet& n : const_cast<DnpParams*>(this)->nets()) out.push_back({n.name, n.net, n.regularized});
  return out;
}

DnpParams make_dnp(const ModelDims& d, Rng& rng, double slope) {
  d.validate();
  DnpParams p;
  const int enc[] = {d.x + d.y, d.h, d.h, d.h};
  const int head[] = {d.h, 2 * d.z};
  const int backbone[] = {d.x, d.h, d.h};
  const int embed[] = {d.h, d.u};
  const int local[] = {d.h + d.y, 2 * d.z};
  const int dec[] = {2 * d.z + d.u, d.h, d.h, 2 * d.y};
  p.global_encoder = make_mlp(enc, rng, slope);
  p.global_prior_head = make_mlp(head, rng, slope);
  p.global_posterior_head = make_mlp(head, rng, slope);
  p.local_backbone = make_mlp(backbone, rng, slope);
  p.embed_head = make_mlp(embed, rng, slope);
  p.local_param_head = make_mlp(local, rng, slope);
  p.decoder = make_mlp(dec, rng, slope);
  return p;
}

std::vector<const BoundMlp*> BoundDnp::all() const {
  return {&global_encoder, &global_prior_head, &global_posterior_head, &local_backbone,
          &embed_head,     &local_param_head,  &decoder};
}

BoundDnp bind(ad::Tape& tape, const DnpParams& p, bool trainable) {
  return {bind(tape, p.global_encoder, trainable),   bind(tape, p.global_prior_head, trainable),
          bind(tape, p.global_posterior_head, trainable), bind(tape, p.local_backbone, trainable),
          bind(tape, p.embed_head, trainable),       bind(tape, p.local_param_head, trainable),
          bind(tape, p.decoder, trainable)};
}

DnpNoise sample_dnp_noise(const BatchLayout& layout, Index d_z, Rng& rng) {
  DnpNoise n;
  n.global = rng.normal_matrix(static_cast<Index>(layout.task_count()), d_z);
  n.local = rng.normal_matrix(static_cast<Index>(layout.query_rows.size()), d_z);
  return n;
}

namespace {

struct LocalPath {
  ad::Var hidden;  // backbone output, all rows
  ad::Var u;       // embeddings, all rows
  GaussianRows params;  // local_param_head on [hidden | y], all rows
};

LocalPath local_path(const BoundDnp& net, ad::Tape& tape, const BatchLayout& layout) {
  LocalPath lp;
  lp.hidden = forward(net.local_backbone, tape.constant(layout.x));
  lp.u = forward(net.embed_head, lp.hidden);
  const ad::Var parts[] = {lp.hidden, tape.constant(layout.y)};
  lp.params = split_gaussian(forward(net.local_param_head, ad::concat_cols(parts)));
  return lp;
}

GaussianRows clamp_rows(GaussianRows g) {
  g.log_var = ad::clamp(g.log_var, kMinLogVar, kMaxLogVar);
  return g;
}

}  // namespace

LossTerms dnp_elbo_loss(const BoundDnp& net, const BatchLayout& layout, const AttentionConfig& attn,
                        const DnpNoise& noise) {
  ad::Tape& tape = *net.decoder.layers.front().weight.tape();
  const Index dz = net.global_prior_head.layers.back().weight.value().rows() / 2;
  if (noise.global.rows() != static_cast<Index>(layout.task_count()) || noise.global.cols() != dz ||
      noise.local.rows() != static_cast<Index>(layout.query_rows.size()) || noise.local.cols() != dz)
    throw DimensionError("dnp_elbo_loss: noise shape does not match the layout");

  // Global path: one encoding per row, pooled per task.
  const ad::Var enc = forward(net.global_encoder, tape.constant(detail::xy_rows(layout)));
  const GaussianRows g_prior = split_gaussian(forward(net.global_prior_head, ad::segment_mean(enc, layout.context_segments())));
  const GaussianRows g_post =
      split_gaussian(forward(net.global_posterior_head, ad::segment_mean(enc, layout.target_segments())));
  const ad::Var z_global = ad::reparameterize(g_post.mean, g_post.log_var, noise.global);

  // Local path.
  const LocalPath lp = local_path(net, tape, layout);
  const GaussianRows l_prior =
      clamp_rows(attend_local_prior(lp.u, lp.params.mean, lp.params.log_var, layout.query_rows, layout.table, attn));
  const GaussianRows l_post{ad::gather_rows(lp.params.mean, layout.query_rows),
                            ad::gather_rows(lp.params.log_var, layout.query_rows)};
  const ad::Var z_local = ad::reparameterize(l_post.mean, l_post.log_var, noise.local);

  const ad::Var dec_in[] = {detail::per_query(z_global, layout), z_local, ad::gather_rows(lp.u, layout.query_rows)};
  const GaussianRows pred = split_gaussian(forward(net.decoder, ad::concat_cols(dec_in)));
  Matrix y_q(static_cast<Index>(layout.query_rows.size()), layout.y.cols());
  for (std::size_t i = 0; i < layout.query_rows.size(); ++i) y_q.row(static_cast<Index>(i)) = layout.y.row(layout.query_rows[i]);

  const std::vector<double> tw = detail::task_weights(layout);
  const ad::Var ll = ad::weighted_sum(ad::gaussian_log_prob_rows(y_q, pred.mean, pred.log_var), layout.query_weight);
  const ad::Var klg = ad::weighted_sum(ad::kl_diag_rows(g_post.mean, g_post.log_var, g_prior.mean, g_prior.log_var), tw);
  const ad::Var kll =
      ad::weighted_sum(ad::kl_diag_rows(l_post.mean, l_post.log_var, l_prior.mean, l_prior.log_var), layout.query_weight);

  LossTerms out;
  out.loss = ad::add(ad::sub(klg, ll), kll);
  out.recon = -ll.scalar();
  out.kl_global = klg.scalar();
  out.kl_local = kll.scalar();
  return out;
}

LossTerms dnp_total_loss(const BoundDnp& net, const BatchLayout& layout, const AttentionConfig& attn,
                         const DnpNoise& noise, const spectral::BiLipConfig& bilip, double beta, Rng& solver_rng) {
  if (!(beta >= 0.0)) throw ConfigError("beta: must be >= 0");
  LossTerms t = dnp_elbo_loss(net, layout, attn, noise);
  if (beta == 0.0) return t;
  ad::Tape& tape = *t.loss.tape();
  const std::vector<const BoundMlp*> reg = net.regularized();
  const ad::Var b = spectral::bilip_loss(tape, reg, bilip, solver_rng);
  t.bilip = b.scalar();
  t.loss = ad::add(t.loss, ad::scale(b, beta));
  return t;
}

DiagGaussian encode_global(const DnpParams& p, std::span<const Vector> xs, std::span<const Vector> ys,
                           GlobalHead head) {
  if (xs.empty()) throw ContractError("encode_global: empty set");
  if (xs.size() != ys.size()) throw DimensionError("encode_global: x/y counts differ");
  // A query layout with no queries holds the set in canonical order.
  const BatchLayout layout = make_query_layout(xs, ys, {});
  ad::Tape tape;
  const BoundMlp enc = bind(tape, p.global_encoder, false);
  const BoundMlp h = bind(tape, head == GlobalHead::prior ? p.global_prior_head : p.global_posterior_head, false);
  const ad::Var pooled = ad::segment_mean(forward(enc, tape.constant(detail::xy_rows(layout))), layout.context_segments());
  const GaussianRows g = split_gaussian(forward(h, pooled));
  return row_gaussian(g.mean.value(), g.log_var.value(), 0);
}

std::vector<Vector> embed_inputs(const DnpParams& p, std::span<const Vector> xs) {
  std::vector<Vector> out;
  if (xs.empty()) return out;
  const Matrix u = mlp_forward_rows(p.embed_head, mlp_forward_rows(p.local_backbone, stack_rows(xs)));
  for (Index r = 0; r < u.rows(); ++r) out.push_back(detail::row_vector(u, r));
  return out;
}

DiagGaussian local_posterior(const DnpParams& p, const Vector& x_t, const Vector& y_t) {
  const Vector h = mlp_forward(p.local_backbone, x_t);
  Vector in(h.size() + y_t.size());
  in << h, y_t;
  const Vector out = mlp_forward(p.local_param_head, in);
  const Index dz = out.size() / 2;
  return {out.head(dz), out.tail(dz).cwiseMax(kMinLogVar).cwiseMin(kMaxLogVar)};
}

DiagGaussian decode(const DnpParams& p, const Vector& z_global, const Vector& z_local, const Vector& u_t) {
  Vector in(z_global.size() + z_local.size() + u_t.size());
  in << z_global, z_local, u_t;
  const Vector out = mlp_forward(p.decoder, in);
  const Index dy = out.size() / 2;
  return {out.head(dy), out.tail(dy).cwiseMax(kMinLogVar).cwiseMin(kMaxLogVar)};
}

ElboReport dnp_elbo(const DnpParams& p, const AttentionConfig& attn, const taskgen::Task& task, Rng& rng) {
  const taskgen::Task one[] = {task};
  const BatchLayout layout = make_training_layout(one);
  ad::Tape tape;
  const BoundDnp net = bind(tape, p, false);
  const DnpNoise noise = sample_dnp_noise(layout, p.global_prior_head.output_dim() / 2, rng);
  const LossTerms t = dnp_elbo_loss(net, layout, attn, noise);
  return {t.loss.scalar(), t.recon, t.kl_global, t.kl_local};
}

double dnp_total_loss(const DnpParams& p, const AttentionConfig& attn, const taskgen::Task& task,
                      const spectral::BiLipConfig& bilip, double beta, Rng& rng) {
  const taskgen::Task one[] = {task};
  const BatchLayout layout = make_training_layout(one);
  ad::Tape tape;
  const BoundDnp net = bind(tape, p, false);
  Rng noise_rng = rng.split("latent");
  Rng solver_rng = rng.split("solver");
  const DnpNoise noise = sample_dnp_noise(layout, p.global_prior_head.output_dim() / 2, noise_rng);
  return dnp_total_loss(net, layout, attn, noise, bilip, beta, solver_rng).loss.scalar();
}

PredictNoise sample_predict_noise(std::size_t targets, Index samples, Index d_z, Rng& rng) {
  if (samples < 1) throw ContractError("prediction needs at least one sample");
  return {rng.normal_matrix(samples, d_z), rng.normal_matrix(static_cast<Index>(targets) * samples, d_z)};
}

GaussianRows dnp_local_prior(const DnpParams& p, const AttentionConfig& attn, ad::Tape& tape,
                             std::span<const Vector> x_context, std::span<const Vector> y_context,
                             std::span<const Vector> x_star) {
  const BatchLayout layout = make_query_layout(x_context, y_context, x_star);
  BoundDnp net;
  net.local_backbone = bind(tape, p.local_backbone, false);
  net.embed_head = bind(tape, p.embed_head, false);
  net.local_param_head = bind(tape, p.local_param_head, false);
  const LocalPath lp = local_path(net, tape, layout);
  return clamp_rows(attend_local_prior(lp.u, lp.params.mean, lp.params.log_var, layout.query_rows, layout.table, attn));
}

PredictiveSet dnp_predict(const DnpParams& p, const AttentionConfig& attn, std::span<const Vector> x_context,
                          std::span<const Vector> y_context, std::span<const Vector> x_star,
                          const PredictNoise& noise) {
  const Index dz = p.global_prior_head.output_dim() / 2;
  const Index S = noise.global.rows();
  const Index n = static_cast<Index>(x_star.size());
  if (S < 1 || noise.global.cols() != dz || noise.local.rows() != n * S || noise.local.cols() != dz)
    throw DimensionError("dnp_predict: noise shape does not match the request");
  if (n == 0) return {};

  const BatchLayout layout = make_query_layout(x_context, y_context, x_star);
  ad::Tape tape;
  const BoundDnp net = bind(tape, p, false);

  // Global prior from the context only.
  const std::vector<int> ctx = layout.tasks.front().context;
  const ad::Var enc = forward(net.global_encoder, ad::gather_rows(tape.constant(detail::xy_rows(layout)), ctx));
  std::vector<std::vector<int>> whole(1);
  for (std::size_t i = 0; i < ctx.size(); ++i) whole[0].push_back(static_cast<int>(i));
  const GaussianRows gp = split_gaussian(forward(net.global_prior_head, ad::segment_mean(enc, whole)));
  const Matrix zg = detail::sample_rows(gp.mean.value().replicate(S, 1), gp.log_var.value().replicate(S, 1), noise.global);

  // Value-only local path, row by row, so a target's prediction does not depend
  // on which other targets are requested alongside it.
  const Matrix hidden = mlp_forward_rows(p.local_backbone, layout.x);
  const Matrix u = mlp_forward_rows(p.embed_head, hidden);
  Matrix hy(hidden.rows(), hidden.cols() + layout.y.cols());
  hy << hidden, layout.y;
  const Matrix params = mlp_forward_rows(p.local_param_head, hy);
  Matrix lmean, llv;
  local_prior_rows(u, params.leftCols(dz), params.rightCols(dz), layout.query_rows, layout.table, attn, lmean, llv);
  llv = llv.cwiseMax(kMinLogVar).cwiseMin(kMaxLogVar);
  const Matrix zl = detail::sample_rows(detail::repeat_rows(lmean, S), detail::repeat_rows(llv, S), noise.local);
  Matrix uq(n, u.cols());
  for (Index i = 0; i < n; ++i) uq.row(i) = u.row(layout.query_rows[static_cast<std::size_t>(i)]);

  Matrix dec_in(n * S, 2 * dz + uq.cols());
  dec_in << detail::tile_rows(zg, n), zl, detail::repeat_rows(uq, S);
  const Matrix out = mlp_forward_rows(p.decoder, dec_in);
  const Index dy = out.cols() / 2;
  const Matrix lv = out.rightCols(dy).cwiseMax(kMinLogVar).cwiseMin(kMaxLogVar);
  return detail::to_predictive(out.leftCols(dy), lv, static_cast<std::size_t>(n), S);
}

PredictiveSet dnp_predict(const DnpParams& p, const AttentionConfig& attn, std::span<const Vector> x_context,
                          std::span<const Vector> y_context, std::span<const Vector> x_star, Index samples, Rng& rng) {
  const PredictNoise noise = sample_predict_noise(x_star.size(), samples, p.global_prior_head.output_dim() / 2, rng);
  return dnp_predict(p, attn, x_context, y_context, x_star, noise);
}

}  // namespace nplab::models
