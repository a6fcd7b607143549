#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "lcd/encoders.hpp"
#include "lcd/error.hpp"
#include "support/oracles.hpp"

namespace lcd {
namespace {

struct Instance {
  LocalFeatureSet features;
  oracle::Mat rows;
  GmmModel gmm;
  Vocabulary vocab;
  oracle::Mat means, vars;
};

Instance random_instance(std::uint64_t seed, std::size_t n, std::size_t k, std::size_t dim) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.3, 1.5);
  Instance inst;
  inst.features = LocalFeatureSet(dim);
  for (std::size_t i = 0; i < n; ++i) {
    oracle::Vec r(dim);
    for (double& v : r) v = g(rng);
    inst.features.add(r);
    inst.rows.push_back(r);
  }
  inst.gmm.k = k;
  inst.gmm.dim = dim;
  double total = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    inst.gmm.weights.push_back(u(rng));
    total += inst.gmm.weights.back();
    oracle::Vec m(dim), s(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      m[j] = g(rng);
      s[j] = u(rng);
    }
    inst.gmm.means.insert(inst.gmm.means.end(), m.begin(), m.end());
    inst.gmm.variances.insert(inst.gmm.variances.end(), s.begin(), s.end());
    inst.means.push_back(m);
    inst.vars.push_back(s);
  }
  for (double& w : inst.gmm.weights) w /= total;
  inst.vocab = {k, dim, inst.gmm.means};
  return inst;
}

void expect_close(const std::vector<double>& got, const oracle::Vec& want, double tol) {
  ASSERT_EQ(got.size(), want.size());
  for (std::size_t i = 0; i < got.size(); ++i) EXPECT_NEAR(got[i], want[i], tol) << "entry " << i;
}

TEST(Bovw, CountsHardAssignments) {
  // words (0,0) and (10,10); features 3 near the first, 1 near the second.
  const Vocabulary vocab{2, 2, {0, 0, 10, 10}};
  LocalFeatureSet f(2);
  for (const std::vector<double> r : {std::vector<double>{1, 0}, {0, 1}, {-1, 0}, {9, 9}}) f.add(r);
  const Descriptor d = encode_bovw(f, vocab);
  EXPECT_NEAR(d.values[0], 3.0 / std::sqrt(10.0), 1e-15);
  EXPECT_NEAR(d.values[1], 1.0 / std::sqrt(10.0), 1e-15);
  EXPECT_EQ(d.source, "bovw");
}

TEST(Bovw, EmptySetIsZeroVector) {
  const Vocabulary vocab{2, 2, {0, 0, 10, 10}};
  const Descriptor d = encode_bovw(LocalFeatureSet(2), vocab);
  EXPECT_EQ(d.values, std::vector<double>(2, 0.0));
}

TEST(Bovw, MatchesOracle) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Instance inst = random_instance(seed, 40, 6, 5);
    expect_close(encode_bovw(inst.features, inst.vocab).values, oracle::bovw(inst.rows, inst.means), 1e-12);
  }
}

TEST(Vlad, SingleFeatureResidual) {
  const GmmModel gmm{2, 2, {0.5, 0.5}, {0, 0, 10, 10}, {1, 1, 1, 1}};
  LocalFeatureSet f(2);
  f.add(std::vector<double>{3, 4});
  const Descriptor d = encode_vlad(f, gmm, {true, false});
  expect_close(d.values, {0.6, 0.8, 0.0, 0.0}, 1e-15);
}

TEST(Vlad, MatchesOracleBothModes) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Instance inst = random_instance(seed, 30, 4, 6);
    for (bool intra : {false, true}) {
      const Descriptor d = encode_vlad(inst.features, inst.gmm, {true, intra});
      EXPECT_EQ(d.values.size(), 24u);
      expect_close(d.values, oracle::vlad(inst.rows, inst.means, intra), 1e-12);
    }
  }
}

TEST(Vlad, EmptySetIsZeroVector) {
  const Instance inst = random_instance(1, 0, 3, 2);
  EXPECT_EQ(encode_vlad(inst.features, inst.gmm).values, std::vector<double>(6, 0.0));
}

TEST(Fv, MatchesOracleBothModes) {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const Instance inst = random_instance(seed, 25, 3, 4);
    for (bool power : {false, true}) {
      const Descriptor d = encode_fv(inst.features, inst.gmm, {power, true});
      EXPECT_EQ(d.values.size(), 24u);
      expect_close(d.values, oracle::fisher(inst.rows, inst.gmm.weights, inst.means, inst.vars, power),
                   1e-10);
    }
  }
}

TEST(Fv, SingleComponentClosedForm) {
  // One unit Gaussian, x = 2: u = 2, v = (4 - 1) / sqrt(2).
  const GmmModel gmm{1, 1, {1.0}, {0.0}, {1.0}};
  LocalFeatureSet f(1);
  f.add(std::vector<double>{2.0});
  const Descriptor d = encode_fv(f, gmm, {false, true});
  const double u = 2.0, v = 3.0 / std::sqrt(2.0);
  const double n = std::hypot(u, v);
  expect_close(d.values, {u / n, v / n}, 1e-15);
}

TEST(Fv, EmptySetThrows) {
  const Instance inst = random_instance(1, 0, 2, 2);
  try {
    encode_fv(inst.features, inst.gmm);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEmptyFeatureSet);
  }
}

TEST(Encoders, DimensionMismatch) {
  const Instance inst = random_instance(1, 5, 2, 3);
  LocalFeatureSet wrong(4);
  wrong.add(std::vector<double>{1, 2, 3, 4});
  for (auto fn : {+[](const LocalFeatureSet& f, const Instance& i) { encode_bovw(f, i.vocab); },
                  +[](const LocalFeatureSet& f, const Instance& i) { encode_vlad(f, i.gmm); },
                  +[](const LocalFeatureSet& f, const Instance& i) { encode_fv(f, i.gmm); }}) {
    try {
      fn(wrong, inst);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kDimMismatch);
    }
  }
}

TEST(Encoders, IndependentOfFeatureOrder) {
  Instance inst = random_instance(3, 50, 4, 3);
  LocalFeatureSet reversed(3);
  for (std::size_t i = inst.rows.size(); i-- > 0;) reversed.add(inst.rows[i]);
  EXPECT_EQ(encode_bovw(inst.features, inst.vocab).values, encode_bovw(reversed, inst.vocab).values);
  EXPECT_EQ(encode_vlad(inst.features, inst.gmm).values, encode_vlad(reversed, inst.gmm).values);
  EXPECT_EQ(encode_fv(inst.features, inst.gmm).values, encode_fv(reversed, inst.gmm).values);
}

TEST(Encoders, DuplicatingFeaturesKeepsBovwAndFv) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = random_instance(seed, 15, 4, 3);
    LocalFeatureSet doubled(3);
    for (const auto& r : inst.rows) {
      doubled.add(r);
      doubled.add(r);
    }
    expect_close(encode_bovw(doubled, inst.vocab).values, encode_bovw(inst.features, inst.vocab).values, 1e-9);
    expect_close(encode_fv(doubled, inst.gmm).values, encode_fv(inst.features, inst.gmm).values, 1e-9);
  }
}

TEST(Vlad, FeaturesOnTheMeansGiveZero) {
  const GmmModel gmm{2, 2, {0.5, 0.5}, {0, 0, 4, 1}, {1, 1, 1, 1}};
  LocalFeatureSet f(2);
  f.add(std::vector<double>{4, 1});
  f.add(std::vector<double>{0, 0});
  f.add(std::vector<double>{4, 1});
  EXPECT_EQ(encode_vlad(f, gmm).values, std::vector<double>(4, 0.0));
}

TEST(Fv, FeaturesAtTheMeanZeroTheMeanBlock) {
  const GmmModel gmm{1, 2, {1.0}, {0.5, -1.0}, {2.0, 0.5}};
  LocalFeatureSet f(2);
  for (int i = 0; i < 3; ++i) f.add(std::vector<double>{0.5, -1.0});
  const Descriptor d = encode_fv(f, gmm);
  EXPECT_EQ(d.values[0], 0.0);
  EXPECT_EQ(d.values[1], 0.0);
  // The variance block is -1 / sqrt(2) per entry before normalization.
  EXPECT_NEAR(d.values[2], -std::sqrt(0.5), 1e-15);
}

TEST(Encoders, OutputsAreUnitNorm) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Instance inst = random_instance(seed, 20, 5, 4);
    for (const auto& d : {encode_bovw(inst.features, inst.vocab), encode_vlad(inst.features, inst.gmm),
                          encode_fv(inst.features, inst.gmm)}) {
      EXPECT_NEAR(l2_norm(d.values), 1.0, 1e-12);
    }
  }
}

}  // namespace
}  // namespace lcd
