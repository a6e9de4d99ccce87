#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "react/embedding.hpp"

using namespace react;

namespace {

Vector random_vector(std::mt19937_64& rng, std::size_t n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vector v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

// Straight-line forward pass written independently of embedding.hpp.
Vector oracle_forward(const EmbeddingModel& m, const Vector& x) {
  Vector a = x;
  const auto& L = m.layers();
  for (std::size_t l = 0; l < L.size(); ++l) {
    Vector z(L[l].outputs, 0.0);
    for (std::size_t r = 0; r < L[l].outputs; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < L[l].inputs; ++c) s += L[l].weights[r * L[l].inputs + c] * a[c];
      z[r] = s + L[l].bias[r];
      if (l + 1 != L.size()) z[r] = std::tanh(z[r]);
    }
    a = z;
  }
  if (m.normalize_output()) {
    double n = 0.0;
    for (double v : a) n += v * v;
    n = std::sqrt(n);
    for (double& v : a) v /= n;
  }
  return a;
}

double oracle_loss(const EmbeddingModel& m, const Vector& a, const Vector& p, const Vector& n,
                   double alpha) {
  const Vector fa = oracle_forward(m, a), fp = oracle_forward(m, p), fn = oracle_forward(m, n);
  double dap = 0.0, dan = 0.0;
  for (std::size_t k = 0; k < fa.size(); ++k) {
    dap += (fa[k] - fp[k]) * (fa[k] - fp[k]);
    dan += (fa[k] - fn[k]) * (fa[k] - fn[k]);
  }
  return std::max(0.0, dap - dan + alpha);
}

// Max relative error between analytic and central-difference gradients.
double gradient_check(const EmbeddingModel& model, const Vector& a, const Vector& p,
                      const Vector& n, double alpha, double h = 1e-5) {
  const TripletGradient g = triplet_loss_grad(model, a, p, n, alpha);
  double worst = 0.0;
  EmbeddingModel m = model;
  for (std::size_t l = 0; l < m.layers().size(); ++l) {
    auto check = [&](Vector& params, const Vector& analytic) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = params[i];
        params[i] = keep + h;
        const double up = oracle_loss(m, a, p, n, alpha);
        params[i] = keep - h;
        const double down = oracle_loss(m, a, p, n, alpha);
        params[i] = keep;
        const double numeric = (up - down) / (2 * h);
        const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-6});
        worst = std::max(worst, std::abs(numeric - analytic[i]) / denom);
      }
    };
    check(m.layers()[l].weights, g.grads.layers[l].weights);
    check(m.layers()[l].bias, g.grads.layers[l].bias);
  }
  return worst;
}

TripletDataset two_blobs(std::uint64_t seed, std::size_t dim, std::size_t per_label,
                         double spread = 0.3) {
  std::mt19937_64 rng(seed);
  const Vector c0 = random_vector(rng, dim, 2.0), c1 = random_vector(rng, dim, 2.0);
  TripletDataset d;
  for (std::size_t i = 0; i < per_label; ++i) {
    for (int label = 0; label < 2; ++label) {
      Vector v = label == 0 ? c0 : c1;
      const Vector noise = random_vector(rng, dim, spread);
      for (std::size_t k = 0; k < dim; ++k) v[k] += noise[k];
      d.items.push_back({v, label});
    }
  }
  return d;
}

}  // namespace

TEST(Embed, ZeroWeightsWithoutNormalizationGiveZero) {
  DenseLayer l{3, 2, Vector(6, 0.0), Vector(2, 0.0)};
  const EmbeddingModel m = EmbeddingModel::from_layers({l}, false, 1.0);
  EXPECT_EQ(embed(m, Vector{1, 2, 3}), (Vector{0, 0}));
}

TEST(Embed, IdentityLinearModelNormalizes) {
  DenseLayer l{2, 2, {1, 0, 0, 1}, {0, 0}};
  const EmbeddingModel m = EmbeddingModel::from_layers({l}, true, 1.0);
  const Vector f = embed(m, Vector{3, 4});
  EXPECT_DOUBLE_EQ(f[0], 0.6);
  EXPECT_DOUBLE_EQ(f[1], 0.8);
}

TEST(Embed, MatchesStraightLineOracle) {
  const EmbeddingModel m = EmbeddingModel::create({12, 9, 7, 5}, 77);
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_vector(rng, 12);
    const Vector got = embed(m, x), want = oracle_forward(m, x);
    ASSERT_EQ(got.size(), 5u);
    for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(got[k], want[k], 1e-14);
  }
  const EmbeddingModel raw = EmbeddingModel::create({12, 9, 5}, 78, false);
  const Vector x = random_vector(rng, 12);
  const Vector got = embed(raw, x), want = oracle_forward(raw, x);
  for (std::size_t k = 0; k < 5; ++k) EXPECT_NEAR(got[k], want[k], 1e-14);
}

TEST(Embed, UnitNormProperty) {
  const EmbeddingModel m = EmbeddingModel::create({16, 12, 8}, 3);
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const Vector f = embed(m, random_vector(rng, 16, 1.0 + trial % 5));
    double n = 0.0;
    for (double x : f) n += x * x;
    EXPECT_NEAR(std::sqrt(n), 1.0, 1e-6);
  }
}

TEST(Embed, Errors) {
  const EmbeddingModel m = EmbeddingModel::create({4, 3}, 1);
  try {
    embed(m, Vector{1, 2, 3});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
  DenseLayer z{2, 2, Vector(4, 0.0), Vector(2, 0.0)};
  const EmbeddingModel zero = EmbeddingModel::from_layers({z}, true, 1.0);
  try {
    embed(zero, Vector{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
  }
  EXPECT_THROW(embed(m, Vector{1, NAN, 0, 0}), Error);
}

TEST(EmbeddingModel, RejectsInconsistentShapes) {
  DenseLayer a{3, 2, Vector(6, 0.1), Vector(2, 0.0)};
  DenseLayer b{3, 2, Vector(5, 0.1), Vector(2, 0.0)};
  EXPECT_THROW(EmbeddingModel::from_layers({b}, true, 1.0), Error);
  DenseLayer c{4, 2, Vector(8, 0.1), Vector(2, 0.0)};
  EXPECT_THROW(EmbeddingModel::from_layers({a, c}, true, 1.0), Error);
  EXPECT_THROW(EmbeddingModel::create({5}, 1), Error);
  EXPECT_THROW(EmbeddingModel::create({5, 0, 2}, 1), Error);
  EXPECT_THROW(EmbeddingModel::create({5, 2}, 1, true, 0.0), Error);
}

TEST(TripletLoss, Examples) {
  const Vector z{0, 0};
  EXPECT_DOUBLE_EQ(triplet_loss(z, z, z, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(triplet_loss(z, z, Vector{1, 0}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(triplet_loss(z, Vector{1, 0}, Vector{0, 2}, 1.0), 0.0);
  EXPECT_DOUBLE_EQ(triplet_loss(z, Vector{1, 0}, Vector{0, 2}, 4.0), 1.0);
  EXPECT_THROW(triplet_loss(z, Vector{1}, z, 1.0), Error);
}

TEST(TripletLoss, NonNegativeProperty) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 500; ++i) {
    const Vector a = random_vector(rng, 4), p = random_vector(rng, 4), n = random_vector(rng, 4);
    EXPECT_GE(triplet_loss(a, p, n, 1.0), 0.0);
  }
}

TEST(TripletLossGrad, InactiveHingeGivesZeroGradient) {
  DenseLayer l{2, 2, {1, 0, 0, 1}, {0, 0}};
  const EmbeddingModel m = EmbeddingModel::from_layers({l}, false, 1.0);
  const TripletGradient g = triplet_loss_grad(m, Vector{0, 0}, Vector{0.1, 0}, Vector{5, 0}, 1.0);
  EXPECT_EQ(g.loss, 0.0);
  EXPECT_TRUE(g.grads.all_zero());
}

TEST(TripletLossGrad, SingleLayerLinearClosedForm) {
  // f(x) = W x; loss = |W(a-p)|^2 - |W(a-n)|^2 + alpha.
  // dL/dW = 2 W (a-p)(a-p)^T - 2 W (a-n)(a-n)^T ; bias cancels.
  DenseLayer l{2, 1, {0.5, -1.0}, {0.25}};
  const EmbeddingModel m = EmbeddingModel::from_layers({l}, false, 1.0);
  const Vector a{1, 2}, p{0, 1}, n{1.5, 2.5};
  const TripletGradient g = triplet_loss_grad(m, a, p, n, 10.0);
  const double uap = 0.5 * 1 - 1.0 * 1, uan = 0.5 * -0.5 - 1.0 * -0.5;
  EXPECT_NEAR(g.loss, uap * uap - uan * uan + 10.0, 1e-14);
  EXPECT_NEAR(g.grads.layers[0].weights[0], 2 * uap * 1 - 2 * uan * -0.5, 1e-14);
  EXPECT_NEAR(g.grads.layers[0].weights[1], 2 * uap * 1 - 2 * uan * -0.5, 1e-14);
  EXPECT_NEAR(g.grads.layers[0].bias[0], 0.0, 1e-14);
}

TEST(TripletLossGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(2025);
  for (int trial = 0; trial < 50; ++trial) {
    const EmbeddingModel m = EmbeddingModel::create({8, 6, 4}, 1000 + trial, trial % 5 != 0);
    const Vector a = random_vector(rng, 8), p = random_vector(rng, 8), n = random_vector(rng, 8);
    EXPECT_LT(gradient_check(m, a, p, n, 4.5), 1e-4) << "trial " << trial;
  }
}

TEST(MineSemiHard, OneDimensionalExample) {
  const std::vector<Vector> e{{0.0}, {0.1}, {0.5}};
  const auto t = mine_semi_hard(e, {0, 0, 1}, 1.0);
  const std::vector<TripletIndices> want{{0, 1, 2, true}, {1, 0, 2, true}};
  EXPECT_EQ(t, want);
}

TEST(MineSemiHard, AgreesWithBruteForceBand) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vector> e;
    std::vector<int> labels;
    for (int i = 0; i < 12; ++i) {
      e.push_back(random_vector(rng, 3, 0.6));
      labels.push_back(i % 3);
    }
    const auto got = mine_semi_hard(e, labels, 1.0, false);
    std::vector<TripletIndices> want;
    for (std::size_t a = 0; a < e.size(); ++a)
      for (std::size_t p = 0; p < e.size(); ++p) {
        if (a == p || labels[a] != labels[p]) continue;
        const double dap = squared_distance(e[a], e[p]);
        double best = INFINITY;
        std::size_t pick = e.size();
        for (std::size_t n = 0; n < e.size(); ++n) {
          if (labels[n] == labels[a]) continue;
          const double dan = squared_distance(e[a], e[n]);
          if (dan > dap && dan < dap + 1.0 && dan < best) {
            best = dan;
            pick = n;
          }
        }
        if (pick < e.size()) want.push_back({a, p, pick, true});
      }
    EXPECT_EQ(got, want);
  }
}

TEST(MineSemiHard, FarNegativesGiveEmptyList) {
  const std::vector<Vector> e{{0.0}, {0.1}, {5.0}, {5.1}};
  EXPECT_TRUE(mine_semi_hard(e, {0, 0, 1, 1}, 1.0).empty());
}

TEST(MineSemiHard, SingleLabelGivesEmptyList) {
  const std::vector<Vector> e{{0.0}, {0.1}, {0.2}};
  EXPECT_TRUE(mine_semi_hard(e, {4, 4, 4}, 1.0).empty());
}

TEST(MineSemiHard, FallbackOnlyForViolatingNegatives) {
  // a=0, p=1 (d=1), negative at 0.5 (d=0.25 <= d_ap): violating, no semi-hard.
  const std::vector<Vector> e{{0.0}, {1.0}, {0.5}};
  const auto with = mine_semi_hard(e, {0, 0, 1}, 0.5, true);
  ASSERT_FALSE(with.empty());
  for (const auto& t : with) {
    EXPECT_FALSE(t.semi_hard);
    EXPECT_LE(squared_distance(e[t.anchor], e[t.negative]),
              squared_distance(e[t.anchor], e[t.positive]));
  }
  EXPECT_TRUE(mine_semi_hard(e, {0, 0, 1}, 0.5, false).empty());
}

TEST(MineSemiHard, SoundnessProperty) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Vector> e;
    std::vector<int> labels;
    for (int i = 0; i < 16; ++i) {
      e.push_back(random_vector(rng, 4));
      labels.push_back(i % 4);
    }
    for (const auto& t : mine_semi_hard(e, labels, 1.0)) {
      EXPECT_EQ(labels[t.anchor], labels[t.positive]);
      EXPECT_NE(labels[t.anchor], labels[t.negative]);
      EXPECT_NE(t.anchor, t.positive);
      const double dap = squared_distance(e[t.anchor], e[t.positive]);
      const double dan = squared_distance(e[t.anchor], e[t.negative]);
      if (t.semi_hard) {
        EXPECT_GT(dan, dap);
        EXPECT_LT(dan, dap + 1.0);
      } else {
        EXPECT_LE(dan, dap);
      }
    }
  }
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.validate());
  c.epochs = 0;
  try {
    c.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::validation);
  }
  c = TrainConfig{};
  c.learning_rate = 0.0;
  EXPECT_THROW(c.validate(), Error);
  EXPECT_EQ(TrainConfig{}.epochs, 30);
  EXPECT_EQ(TrainConfig{}.learning_rate, 0.001);
}

TEST(TripletDataset, Validation) {
  TripletDataset d;
  d.items = {{{1.0}, 0}, {{2.0}, 0}};
  EXPECT_THROW(d.validate(1), Error);
  d.items.push_back({{3.0}, 1});
  EXPECT_THROW(d.validate(1), Error);
  d.items.push_back({{4.0}, 1});
  EXPECT_NO_THROW(d.validate(1));
  EXPECT_THROW(d.validate(2), Error);
}

TEST(Train, SeparatesTwoCategories) {
  const TripletDataset d = two_blobs(5, 16, 20);
  TrainConfig c;
  c.seed = 9;
  c.augmentation.mode = AugmentMode::none;
  const TrainResult r = train(EmbeddingModel::create({16, 12, 8}, 9), d, c);
  ASSERT_EQ(r.curve.size(), 30u);
  double max_intra = 0.0, min_inter = INFINITY;
  std::vector<Vector> e;
  for (const auto& it : d.items) e.push_back(embed(r.model, it.descriptor));
  for (std::size_t i = 0; i < e.size(); ++i)
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      const double v = squared_distance(e[i], e[j]);
      if (d.items[i].label == d.items[j].label)
        max_intra = std::max(max_intra, v);
      else
        min_inter = std::min(min_inter, v);
    }
  EXPECT_LT(max_intra, min_inter);
  EXPECT_LE(r.curve.back().mean_loss, r.curve.front().mean_loss);
}

TEST(Train, DeterministicPerSeed) {
  const TripletDataset d = two_blobs(6, 10, 12, 6.0);
  TrainConfig c;
  c.seed = 4;
  c.epochs = 5;
  const EmbeddingModel m0 = EmbeddingModel::create({10, 8, 4}, 4);
  const TrainResult a = train(m0, d, c), b = train(m0, d, c);
  ASSERT_GT(a.curve.front().active_triplet_fraction, 0.0);
  EXPECT_EQ(a.curve, b.curve);
  EXPECT_EQ(a.model, b.model);
  c.seed = 5;
  EXPECT_NE(train(m0, d, c).model, a.model);
}

TEST(Train, LowersDatasetLoss) {
  const TripletDataset d = two_blobs(7, 16, 15, 1.5);
  TrainConfig c;
  c.seed = 2;
  const EmbeddingModel m0 = EmbeddingModel::create({16, 12, 8}, 2);
  const TrainResult r = train(m0, d, c);
  ASSERT_GT(dataset_loss(m0, d, 1.0), 0.0);
  EXPECT_LT(dataset_loss(r.model, d, 1.0), dataset_loss(m0, d, 1.0));
}

TEST(Train, DivergenceIsReported) {
  const TripletDataset d = two_blobs(8, 6, 6);
  TrainConfig c;
  c.seed = 1;
  c.epochs = 3;
  c.learning_rate = 1e308;
  c.augmentation.mode = AugmentMode::none;
  try {
    train(EmbeddingModel::create({6, 4}, 1, false), d, c);
    FAIL() << "expected divergence";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::divergence);
  }
}

TEST(Train, RejectsTooSmallDataset) {
  TripletDataset d;
  d.items = {{{1.0, 0.0}, 0}, {{0.0, 1.0}, 1}};
  EXPECT_THROW(train(EmbeddingModel::create({2, 2}, 1), d, TrainConfig{}), Error);
}

TEST(LossCurveCsv, Format) {
  const std::string csv = loss_curve_csv({{1, 0.5, 0.25}, {2, 0.125, 0.0}});
  EXPECT_EQ(csv, "epoch,mean_loss,active_triplet_fraction\n1,0.5,0.25\n2,0.125,0\n");
}

TEST(ModelFile, RoundTripIsExact) {
  const EmbeddingModel m = EmbeddingModel::create({7, 5, 3}, 123, false, 0.75);
  const EmbeddingModel back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
  EXPECT_EQ(back, m);
  EXPECT_EQ(back.margin(), 0.75);
  EXPECT_FALSE(back.normalize_output());
}

TEST(ModelFile, LoaderValidatesShapes) {
  nlohmann::json j = model_to_json(EmbeddingModel::create({4, 3}, 1));
  j["layers"][0]["bias"].push_back(0.0);
  EXPECT_THROW(model_from_json(j), Error);
  nlohmann::json k = model_to_json(EmbeddingModel::create({4, 3}, 1));
  k["layer_dims"] = {4, 2};
  EXPECT_THROW(model_from_json(k), Error);
  try {
    load_model(::testing::TempDir() + "no_such_model.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::io);
  }
}
