#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "nplab/models/attention.hpp"
#include "nplab/models/layout.hpp"
#include "oracles.hpp"

using namespace nplab;
using namespace nplab::models;

namespace {

Vector vec(std::initializer_list<double> v) { return Eigen::Map<const Vector>(v.begin(), static_cast<Index>(v.size())); }

// Context embeddings at distance d from the origin along the first axis.
std::vector<Vector> at_distances(std::initializer_list<double> ds, Index du) {
  std::vector<Vector> out;
  for (double d : ds) {
    Vector u = Vector::Zero(du);
    u[0] = d;
    out.push_back(u);
  }
  return out;
}

BatchLayout single_query_layout(int m) {
  std::vector<Vector> xc, yc;
  for (int i = 0; i < m; ++i) {
    xc.push_back(Vector::Constant(1, i));
    yc.push_back(Vector::Constant(1, 0.0));
  }
  const std::vector<Vector> xq = {Vector::Constant(1, 0.5)};
  return make_query_layout(xc, yc, xq);
}

}  // namespace

TEST(Attention, SinglePointAndSymmetry) {
  const Vector ut = Vector::Zero(4);
  EXPECT_DOUBLE_EQ(laplace_attention(ut, at_distances({3.0}, 4), true)[0], 1.0);
  const std::vector<Vector> sym = {vec({1, 0, 0, 0}), vec({0, -1, 0, 0})};
  const std::vector<double> w = laplace_attention(ut, sym, true);
  EXPECT_DOUBLE_EQ(w[0], 0.5);
  EXPECT_DOUBLE_EQ(w[1], 0.5);
}

TEST(Attention, LaplaceWeightsForKnownDistances) {
  // d_u = 4 so scores are -d / 2; softmax of {0, -0.5, -1}.
  const std::vector<double> w = laplace_attention(Vector::Zero(4), at_distances({0, 1, 2}, 4), true);
  EXPECT_NEAR(w[0], 0.5064803910556540, 1e-13);
  EXPECT_NEAR(w[1], 0.3071958857184984, 1e-13);
  EXPECT_NEAR(w[2], 0.1863237232258476, 1e-13);
  const std::vector<double> raw = laplace_attention(Vector::Zero(4), at_distances({0, 1, 2}, 4), false);
  EXPECT_NEAR(raw[1], std::exp(-0.5), 1e-15);
  EXPECT_NEAR(raw[2], std::exp(-1.0), 1e-15);
}

TEST(Attention, DotProductScores) {
  const std::vector<Vector> uc = {vec({1, 0, 0, 0}), vec({2, 0, 0, 0})};
  const std::vector<double> w = attention_weights(vec({1, 0, 0, 0}), uc, AttentionKind::dot, true);
  const double a = std::exp(0.5), b = std::exp(1.0);
  EXPECT_NEAR(w[0], a / (a + b), 1e-14);
  EXPECT_NEAR(w[1], b / (a + b), 1e-14);
}

TEST(Attention, NormalizedRowsSumToOne) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    std::vector<Vector> uc;
    for (int i = 0; i < 20; ++i) uc.push_back(rng.normal_vector(8) * 3.0);
    for (AttentionKind k : {AttentionKind::laplace, AttentionKind::dot}) {
      const std::vector<double> w = attention_weights(rng.normal_vector(8), uc, k, true);
      EXPECT_NEAR(std::accumulate(w.begin(), w.end(), 0.0), 1.0, 1e-12);
      for (double x : w) {
        EXPECT_GE(x, 0.0);
        EXPECT_LE(x, 1.0);
      }
    }
  }
}

TEST(LocalPrior, SingleContextPoint) {
  const std::vector<Vector> mu = {vec({0.3, -0.2})}, lv = {vec({0.1, -1.0})};
  const double a[] = {1.0};
  for (VarianceMode m : {VarianceMode::literal, VarianceMode::log_weighted}) {
    const DiagGaussian g = local_prior(a, mu, lv, m);
    EXPECT_EQ(g.mean, mu[0]);
    EXPECT_NEAR((g.log_var - lv[0]).norm(), 0.0, 1e-15);
  }
}

TEST(LocalPrior, LiteralModeVarianceGrowsWithContext) {
  const std::vector<Vector> mu = {vec({1.0}), vec({2.0}), vec({3.0})}, lv = {vec({0.5}), vec({-0.3}), vec({2.0})};
  const double a[] = {1e-12, 1e-12, 1e-12};
  const DiagGaussian g = local_prior(a, mu, lv, VarianceMode::literal);
  EXPECT_NEAR(std::exp(g.log_var[0]), 3.0, 1e-9);
}

TEST(LocalPrior, UnnormalizedFarTargetRevertsToStandardNormal) {
  const Index du = 16;
  Rng rng(2);
  std::vector<Vector> uc, mu, lv;
  for (int i = 0; i < 10; ++i) {
    uc.push_back(rng.normal_vector(du));
    mu.push_back(rng.normal_vector(3) * 2.0);
    lv.push_back(rng.normal_vector(3));
  }
  double reach = 0.0;
  for (const Vector& u : uc) reach = std::max(reach, u.norm());
  // Every context embedding is at least 100 sqrt(d_u) away from the target.
  Vector ut = Vector::Zero(du);
  ut[0] = 100.0 * std::sqrt(static_cast<double>(du)) + reach;
  const std::vector<double> w = laplace_attention(ut, uc, false);
  const DiagGaussian g = local_prior(w, mu, lv, VarianceMode::log_weighted);
  EXPECT_LE(g.mean.norm(), 1e-3);
  EXPECT_LE((g.variance().array() - 1.0).abs().maxCoeff(), 1e-3);
}

TEST(LocalPrior, BatchedMatchesPerQuery) {
  Rng rng(3);
  const int m = 6;
  const BatchLayout layout = single_query_layout(m);
  const Index rows = layout.x.rows(), dz = 3;
  const Matrix u = rng.normal_matrix(rows, 5), mu = rng.normal_matrix(rows, dz), lv = rng.normal_matrix(rows, dz);
  for (AttentionKind kind : {AttentionKind::laplace, AttentionKind::dot}) {
    for (bool normalize : {true, false}) {
      for (VarianceMode mode : {VarianceMode::literal, VarianceMode::log_weighted}) {
        AttentionConfig cfg{kind, normalize, mode};
        Matrix om, ol;
        local_prior_rows(u, mu, lv, layout.query_rows, layout.table, cfg, om, ol);
        std::vector<Vector> uc, muc, lvc;
        for (int j = 0; j < layout.table.count[0]; ++j) {
          const int r = layout.table.at(0, j);
          uc.push_back(u.row(r).transpose());
          muc.push_back(mu.row(r).transpose());
          lvc.push_back(lv.row(r).transpose());
        }
        const std::vector<double> w = attention_weights(u.row(layout.query_rows[0]).transpose(), uc, kind, normalize);
        const DiagGaussian g = local_prior(w, muc, lvc, mode);
        EXPECT_LT((om.row(0).transpose() - g.mean).norm(), 1e-12);
        EXPECT_LT((ol.row(0).transpose() - g.log_var).norm(), 1e-12);
        ad::Tape tape;
        const GaussianRows gr = attend_local_prior(tape.constant(u), tape.constant(mu), tape.constant(lv),
                                                   layout.query_rows, layout.table, cfg);
        EXPECT_EQ(gr.mean.value(), om);
        EXPECT_EQ(gr.log_var.value(), ol);
      }
    }
  }
}

TEST(LocalPrior, BatchedGradientMatchesFiniteDifferences) {
  Rng rng(4);
  const BatchLayout layout = single_query_layout(5);
  const Index rows = layout.x.rows();
  std::vector<Matrix> in = {rng.normal_matrix(rows, 4), rng.normal_matrix(rows, 2), rng.normal_matrix(rows, 2)};
  const Matrix wm = rng.normal_matrix(1, 2), wl = rng.normal_matrix(1, 2);
  for (AttentionKind kind : {AttentionKind::laplace, AttentionKind::dot}) {
    for (bool normalize : {true, false}) {
      for (VarianceMode mode : {VarianceMode::literal, VarianceMode::log_weighted}) {
        const AttentionConfig cfg{kind, normalize, mode};
        auto eval = [&](std::vector<Matrix>* grads) {
          ad::Tape tape;
          const ad::Var u = tape.parameter(in[0]), mu = tape.parameter(in[1]), lv = tape.parameter(in[2]);
          const GaussianRows g = attend_local_prior(u, mu, lv, layout.query_rows, layout.table, cfg);
          const ad::Var loss = ad::add(ad::sum(ad::mul_constant(g.mean, wm)), ad::sum(ad::mul_constant(g.log_var, wl)));
          if (grads) {
            tape.backward(loss);
            *grads = {tape.grad(u), tape.grad(mu), tape.grad(lv)};
          }
          return loss.scalar();
        };
        std::vector<Matrix> grads;
        eval(&grads);
        for (std::size_t k = 0; k < 3; ++k)
          for (Index i = 0; i < in[k].size(); ++i) {
            const auto r = oracle::probe(in[k].data()[i], grads[k].data()[i], [&] { return eval(nullptr); });
            EXPECT_LE(r.rel_error, 1e-6) << "input " << k << " entry " << i;
          }
      }
    }
  }
}

TEST(Layout, QueryLayoutIsCanonicalAndPadded) {
  const std::vector<Vector> xc = {Vector::Constant(1, 0.7), Vector::Constant(1, -0.3), Vector::Constant(1, 0.1)};
  const std::vector<Vector> yc = {Vector::Constant(1, 1.0), Vector::Constant(1, 2.0), Vector::Constant(1, 3.0)};
  const std::vector<Vector> xq = {Vector::Constant(1, 0.0), Vector::Constant(1, 5.0)};
  const BatchLayout l = make_query_layout(xc, yc, xq);
  ASSERT_EQ(l.query_rows.size(), 2u);
  EXPECT_EQ(l.table.count[0], 3);
  // Context rows come first in ascending x.
  const std::vector<int>& ctx = l.tasks.front().context;
  for (std::size_t i = 1; i < ctx.size(); ++i) EXPECT_LT(l.x(ctx[i - 1], 0), l.x(ctx[i], 0));
  EXPECT_EQ(l.x(l.query_rows[1], 0), 5.0);
}
