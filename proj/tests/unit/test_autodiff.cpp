#include "gmnn/autodiff/ops.hpp"
#include "gmnn/autodiff/optimizer.hpp"

#include "../support/gradcheck.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

namespace gmnn::ad {
namespace {

using M = Matrix<double>;
using S = SparseMatrix<double>;

M mat(std::initializer_list<std::initializer_list<double>> rows) {
  M m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

TEST(SparseMatrix, RejectsUnsortedColumns) {
  EXPECT_THROW(S(1, 3, {0, 2}, {2, 1}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(S(1, 3, {0, 2}, {1, 1}, {1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(S(1, 2, {0, 1}, {2}, {1.0}), std::invalid_argument);
  EXPECT_THROW(S(2, 2, {0, 1, 0}, {0}, {1.0}), std::invalid_argument);
}

TEST(SparseMatrix, TripletsSumDuplicates) {
  const auto s = S::from_triplets(2, 2, {{1, 0, 1.5}, {0, 1, 2.0}, {1, 0, 0.5}});
  EXPECT_EQ(s.nnz(), 2u);
  EXPECT_DOUBLE_EQ(s.at(1, 0), 2.0);
  EXPECT_DOUBLE_EQ(s.at(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(s.at(0, 0), 0.0);
}

TEST(SparseMatrix, TransposeMatchesDense) {
  Rng rng(3);
  const auto s = testing::random_sparse<double>(5, 7, 0.3, rng);
  EXPECT_EQ(s.transpose().to_dense(), M(s.to_dense().transpose()));
}

TEST(Spmm, IdentityIsExact) {
  Rng rng(1);
  const M x = testing::random_matrix<double>(6, 4, rng);
  Tape<double> tape;
  const Var out = spmm(tape, S::identity(6), tape.constant(x));
  EXPECT_EQ(tape.value(out), x);

  Tape<float> ftape;
  const Matrix<float> xf = x.cast<float>();
  EXPECT_EQ(ftape.value(spmm(ftape, SparseMatrix<float>::identity(6), ftape.constant(xf))), xf);
}

TEST(Spmm, ScalarProduct) {
  Tape<double> tape;
  const Var out = spmm(tape, S::from_triplets(1, 1, {{0, 0, 2.0}}), tape.constant(mat({{3.0}})));
  EXPECT_DOUBLE_EQ(tape.value(out)(0, 0), 6.0);
}

TEST(Spmm, MatchesDenseReference) {
  Rng rng(7);
  const auto a = testing::random_sparse<double>(6, 6, 0.4, rng);
  const M x = testing::random_matrix<double>(6, 4, rng);
  const M dense = a.to_dense();
  M reference = M::Zero(6, 4);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 6; ++j)
      for (int k = 0; k < 4; ++k) reference(i, k) += dense(i, j) * x(j, k);
  Tape<double> tape;
  EXPECT_TRUE(tape.value(spmm(tape, a, tape.constant(x))).isApprox(reference, 1e-12));
}

TEST(Spmm, DimensionMismatchThrows) {
  Tape<double> tape;
  EXPECT_THROW(spmm(tape, S::identity(3), tape.constant(M::Zero(4, 2))), ShapeError);
}

TEST(Spmm, GradientIsTransposeProduct) {
  Rng rng(11);
  const auto a = testing::random_sparse<double>(5, 5, 0.5, rng);
  const M x = testing::random_matrix<double>(5, 3, rng);
  Tape<double> tape;
  const Var xv = tape.leaf(x);
  tape.backward(sum(tape, spmm(tape, a, xv)));
  const M expected = a.to_dense().transpose() * M::Ones(5, 3);
  EXPECT_TRUE(tape.grad(xv).isApprox(expected, 1e-12));
}

TEST(Affine, IdentityInput) {
  Tape<double> tape;
  const Var out = affine(tape, tape.constant(M::Identity(2, 2)), tape.constant(mat({{1, 2}, {3, 4}})),
                         tape.constant(M::Zero(1, 2)));
  EXPECT_EQ(tape.value(out), mat({{1, 2}, {3, 4}}));
}

TEST(Affine, BiasOnly) {
  Tape<double> tape;
  const M b = mat({{0.5, -1.5, 2.0}});
  const Var out = affine(tape, tape.constant(M::Zero(4, 2)), tape.constant(M::Ones(2, 3)), tape.constant(b));
  for (int r = 0; r < 4; ++r) EXPECT_EQ(M(tape.value(out).row(r)), b);
}

TEST(Affine, MatchesTripleLoop) {
  Rng rng(5);
  const M x = testing::random_matrix<double>(5, 3, rng);
  const M w = testing::random_matrix<double>(3, 2, rng);
  const M b = testing::random_matrix<double>(1, 2, rng);
  M reference(5, 2);
  for (int i = 0; i < 5; ++i)
    for (int k = 0; k < 2; ++k) {
      double acc = b(0, k);
      for (int j = 0; j < 3; ++j) acc += x(i, j) * w(j, k);
      reference(i, k) = acc;
    }
  Tape<double> tape;
  const Var out = affine(tape, tape.constant(x), tape.constant(w), tape.constant(b));
  EXPECT_TRUE(tape.value(out).isApprox(reference, 1e-12));
}

TEST(Affine, DimensionMismatchThrows) {
  Tape<double> tape;
  EXPECT_THROW(affine(tape, tape.constant(M::Zero(2, 3)), tape.constant(M::Zero(2, 2)), tape.constant(M::Zero(1, 2))),
               ShapeError);
  EXPECT_THROW(matmul(tape, tape.constant(M::Zero(2, 3)), tape.constant(M::Zero(2, 2))), ShapeError);
}

TEST(Affine, GradientsMatchFiniteDifferences) {
  Rng rng(9);
  ParameterSet<double> params;
  params.emplace_back("x", testing::random_matrix<double>(4, 3, rng));
  params.emplace_back("w", testing::random_matrix<double>(3, 2, rng));
  params.emplace_back("b", testing::random_matrix<double>(1, 2, rng));
  const M target = testing::random_stochastic<double>(4, 2, rng);
  const std::vector<std::size_t> mask{0, 1, 2, 3};
  auto run = [&](bool grad) {
    Tape<double> tape;
    const Var out = affine(tape, tape.parameter(params[0]), tape.parameter(params[1]), tape.parameter(params[2]));
    const Var loss = masked_cross_entropy(tape, out, target, mask);
    if (grad) tape.backward(loss);
    return tape.value(loss)(0, 0);
  };
  EXPECT_LT(testing::gradcheck(params, [&] { return run(false); }, [&] { run(true); }), 1e-6);
}

TEST(Relu, Values) {
  Tape<double> tape;
  EXPECT_EQ(tape.value(relu(tape, tape.constant(mat({{-1, 0, 2}})))), mat({{0, 0, 2}}));
  EXPECT_EQ(tape.value(relu(tape, tape.constant(mat({{-1, -2}, {-3, -0.5}})))), M::Zero(2, 2));
}

TEST(Relu, GradientMasksNonPositive) {
  Tape<double> tape;
  const Var x = tape.leaf(mat({{3.0, -3.0}}));
  tape.backward(sum(tape, relu(tape, x)));
  EXPECT_EQ(tape.grad(x), mat({{1.0, 0.0}}));
}

TEST(Dropout, EvalAndZeroRateAreIdentity) {
  Rng rng(2);
  const M x = testing::random_matrix<double>(10, 10, rng);
  Tape<double> tape;
  EXPECT_EQ(tape.value(dropout(tape, tape.constant(x), 0.5, false, rng)), x);
  EXPECT_EQ(tape.value(dropout(tape, tape.constant(x), 0.0, true, rng)), x);
}

TEST(Dropout, RejectsRateOne) {
  Rng rng(2);
  Tape<double> tape;
  EXPECT_THROW(dropout(tape, tape.constant(M::Ones(2, 2)), 1.0, true, rng), std::invalid_argument);
  EXPECT_THROW(dropout(tape, tape.constant(M::Ones(2, 2)), -0.1, false, rng), std::invalid_argument);
  EXPECT_THROW(dropout_values(S::identity(2), 1.0, true, rng), std::invalid_argument);
}

TEST(Dropout, SurvivorStatistics) {
  Rng rng(4);
  Tape<double> tape;
  const M x = M::Ones(1000, 100);
  const M out = tape.value(dropout(tape, tape.constant(x), 0.5, true, rng));
  const double survivors = static_cast<double>((out.array() != 0.0).count());
  EXPECT_NEAR(survivors / 1e5, 0.5, 0.01);
  EXPECT_NEAR(out.sum() / survivors, 2.0, 0.05);
}

TEST(Dropout, SparseSurvivorStatistics) {
  Rng rng(6);
  const auto x = S::from_dense(M::Ones(500, 200));
  const auto out = dropout_values(x, 0.5, true, rng);
  double survivors = 0, total = 0;
  for (double v : out.values()) {
    survivors += v != 0.0;
    total += v;
  }
  EXPECT_NEAR(survivors / 1e5, 0.5, 0.01);
  EXPECT_NEAR(total / survivors, 2.0, 0.05);
}

TEST(CrossEntropy, UniformLogitsGiveLn2) {
  Tape<double> tape;
  const M target = mat({{1, 0}, {0, 1}});
  const std::vector<std::size_t> mask{0, 1};
  const Var loss = masked_cross_entropy(tape, tape.constant(M::Zero(2, 2)), target, mask);
  EXPECT_NEAR(tape.value(loss)(0, 0), std::log(2.0), 1e-12);
}

TEST(CrossEntropy, SelfTargetGivesEntropy) {
  const M logits = mat({{0.3, -1.2, 2.0}});
  const M p = softmax_rows(logits);
  double entropy = 0;
  for (int k = 0; k < 3; ++k) entropy -= p(0, k) * std::log(p(0, k));
  Tape<double> tape;
  const std::vector<std::size_t> mask{0};
  EXPECT_NEAR(tape.value(masked_cross_entropy(tape, tape.constant(logits), p, mask))(0, 0), entropy, 1e-12);
}

TEST(CrossEntropy, SaturatedLogits) {
  Tape<double> tape;
  const M target = mat({{1, 0}});
  const std::vector<std::size_t> mask{0};
  EXPECT_LT(tape.value(masked_cross_entropy(tape, tape.constant(mat({{50, -50}})), target, mask))(0, 0), 1e-6);
}

TEST(CrossEntropy, OnlyMaskedRowsCount) {
  Tape<double> tape;
  const M logits = mat({{0, 0}, {100, -100}});
  const M target = mat({{1, 0}, {0, 1}});
  const std::vector<std::size_t> mask{0};
  EXPECT_NEAR(tape.value(masked_cross_entropy(tape, tape.constant(logits), target, mask))(0, 0), std::log(2.0),
              1e-12);
}

TEST(CrossEntropy, Errors) {
  Tape<double> tape;
  const M target = mat({{0.5, 0.4}});
  const std::vector<std::size_t> empty;
  const std::vector<std::size_t> mask{0};
  EXPECT_THROW(masked_cross_entropy(tape, tape.constant(M::Zero(1, 2)), target, empty), std::invalid_argument);
  EXPECT_THROW(masked_cross_entropy(tape, tape.constant(M::Zero(1, 2)), target, mask), std::invalid_argument);
}

TEST(Softmax, RowsStochasticAndPositive) {
  Rng rng(12);
  const M p = softmax_rows<double>(testing::random_matrix<double>(20, 6, rng, 10.0));
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    EXPECT_NEAR(p.row(r).sum(), 1.0, 1e-6);
    EXPECT_GT(p.row(r).minCoeff(), 0.0);
  }
}

TEST(Backward, SumGivesOnes) {
  Tape<double> tape;
  const Var x = tape.leaf(M::Constant(3, 2, 0.7));
  tape.backward(sum(tape, x));
  EXPECT_EQ(tape.grad(x), M::Ones(3, 2));
}

TEST(Backward, ReluSum) {
  Tape<double> tape;
  const Var x = tape.leaf(mat({{-1, 2}}));
  tape.backward(sum(tape, relu(tape, x)));
  EXPECT_EQ(tape.grad(x), mat({{0, 1}}));
}

TEST(Backward, OffPathGradientIsZero) {
  Tape<double> tape;
  const Var x = tape.leaf(mat({{1, 2}}));
  const Var y = tape.leaf(mat({{3, 4}}));
  relu(tape, y);
  tape.backward(sum(tape, x));
  EXPECT_EQ(tape.grad(y), M::Zero(1, 2));
}

TEST(Backward, NonScalarLossThrows) {
  Tape<double> tape;
  const Var x = tape.leaf(mat({{1, 2}}));
  EXPECT_THROW(tape.backward(x), ShapeError);
}

TEST(Backward, ReusedValueAccumulates) {
  Rng rng(8);
  ParameterSet<double> params;
  params.emplace_back("x", testing::random_matrix<double>(3, 3, rng));
  auto run = [&](bool grad) {
    Tape<double> tape;
    const Var x = tape.parameter(params[0]);
    const Var y = matmul(tape, x, x);
    const Var z = add(tape, relu(tape, y), scale(tape, x, 3.0));
    const Var loss = sum(tape, matmul(tape, z, x));
    if (grad) tape.backward(loss);
    return tape.value(loss)(0, 0);
  };
  EXPECT_LT(testing::gradcheck(params, [&] { return run(false); }, [&] { run(true); }), 1e-6);
}

TEST(Backward, RowBlockAndConcatGradients) {
  Rng rng(10);
  ParameterSet<double> params;
  params.emplace_back("a", testing::random_matrix<double>(4, 2, rng));
  params.emplace_back("w", testing::random_matrix<double>(5, 3, rng));
  const M b = testing::random_matrix<double>(4, 3, rng);
  auto run = [&](bool grad) {
    Tape<double> tape;
    const Var cat = concat_cols(tape, tape.parameter(params[0]), tape.constant(b));
    const Var w = tape.parameter(params[1]);
    const Var top = row_block(tape, w, 0, 2);
    const Var rest = row_block(tape, w, 2, 3);
    const Var z = add(tape, matmul(tape, tape.parameter(params[0]), top), matmul(tape, tape.constant(b), rest));
    const Var loss = sum(tape, relu(tape, add(tape, z, matmul(tape, cat, w))));
    if (grad) tape.backward(loss);
    return tape.value(loss)(0, 0);
  };
  EXPECT_LT(testing::gradcheck(params, [&] { return run(false); }, [&] { run(true); }), 1e-6);
}

TEST(Tape, NonFiniteValueThrows) {
  Tape<double> tape;
  const Var x = tape.leaf(mat({{1e308}}));
  EXPECT_THROW(scale(tape, x, 1e10), std::domain_error);
}

TEST(Optimizer, ZeroGradientNoDecayIsNoop) {
  for (auto kind : {OptimizerKind::RmsProp, OptimizerKind::Adam}) {
    ParameterSet<double> params;
    params.emplace_back("p", mat({{1.0, -2.0}}));
    Optimizer<double> opt({kind, 0.05, 0.0});
    opt.step(params);
    EXPECT_EQ(params[0].value, mat({{1.0, -2.0}}));
  }
}

TEST(Optimizer, WeightDecayShrinks) {
  for (auto kind : {OptimizerKind::RmsProp, OptimizerKind::Adam}) {
    ParameterSet<double> params;
    params.emplace_back("p", mat({{1.0, -2.0}}));
    Optimizer<double> opt({kind, 0.05, 5e-4});
    opt.step(params);
    EXPECT_LT(params[0].value(0, 0), 1.0);
    EXPECT_GT(params[0].value(0, 0), 0.0);
    EXPECT_GT(params[0].value(0, 1), -2.0);
    EXPECT_LT(params[0].value(0, 1), 0.0);
  }
}

TEST(Optimizer, RmsPropSingleStepByHand) {
  ParameterSet<double> params;
  params.emplace_back("p", mat({{1.0}}));
  params[0].grad(0, 0) = 1.0;
  Optimizer<double> opt({OptimizerKind::RmsProp, 0.05, 0.0});
  opt.step(params);
  // acc = 0.01 * 1 = 0.01; step = 0.05 * 1 / (0.1 + 1e-8)
  EXPECT_NEAR(params[0].value(0, 0), 1.0 - 0.05 / (0.1 + 1e-8), 1e-15);
  EXPECT_NEAR(opt.second_moments()[0](0, 0), 0.01, 1e-15);
}

TEST(Optimizer, AdamSingleStepByHand) {
  ParameterSet<double> params;
  params.emplace_back("p", mat({{1.0}}));
  params[0].grad(0, 0) = 0.3;
  Optimizer<double> opt({OptimizerKind::Adam, 0.01, 0.0});
  opt.step(params);
  // Bias-corrected moments reduce the first step to lr * g / (|g| + eps).
  EXPECT_NEAR(params[0].value(0, 0), 1.0 - 0.01 * 0.3 / (0.3 + 1e-8), 1e-12);
}

TEST(Optimizer, AccumulatorsNonnegative) {
  Rng rng(13);
  ParameterSet<double> params;
  params.emplace_back("p", testing::random_matrix<double>(4, 4, rng));
  for (auto kind : {OptimizerKind::RmsProp, OptimizerKind::Adam}) {
    Optimizer<double> opt({kind});
    for (int s = 0; s < 5; ++s) {
      params[0].grad = testing::random_matrix<double>(4, 4, rng);
      opt.step(params);
      EXPECT_GE(opt.second_moments()[0].minCoeff(), 0.0);
    }
  }
}

TEST(Optimizer, KindNames) {
  EXPECT_EQ(optimizer_kind_from_string("adam"), OptimizerKind::Adam);
  EXPECT_EQ(optimizer_kind_from_string(to_string(OptimizerKind::RmsProp)), OptimizerKind::RmsProp);
  EXPECT_THROW(optimizer_kind_from_string("sgd"), std::invalid_argument);
}

}  // namespace
}  // namespace gmnn::ad
