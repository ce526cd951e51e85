#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sensorplace/basis.hpp"
#include "sensorplace/numerics.hpp"

using namespace sensorplace;

namespace {

template <typename F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidInput;
}

bool orthonormal_columns(const Matrix& m, double tol) {
  return (m.transpose() * m - Matrix::Identity(m.cols(), m.cols())).cwiseAbs().maxCoeff() <= tol;
}

}  // namespace

// ---- svd_truncated ----

TEST(SvdTruncated, DiagonalMatrix) {
  Matrix m = Vector::LinSpaced(3, 3.0, 1.0).asDiagonal();
  const SvdResult svd = svd_truncated(m, 2);
  ASSERT_EQ(svd.singular_values.size(), 2);
  EXPECT_NEAR(svd.singular_values(0), 3.0, 1e-14);
  EXPECT_NEAR(svd.singular_values(1), 2.0, 1e-14);
  EXPECT_NEAR(std::abs(svd.right_modes(0, 0)), 1.0, 1e-14);
  EXPECT_NEAR(std::abs(svd.right_modes(1, 1)), 1.0, 1e-14);
}

TEST(SvdTruncated, IsometryHasUnitSingularValues) {
  const Matrix q = oracle::random_orthonormal(5, 3, 11);
  const SvdResult svd = svd_truncated(q, 3);
  for (Eigen::Index k = 0; k < 3; ++k) EXPECT_NEAR(svd.singular_values(k), 1.0, 1e-12);
}

TEST(SvdTruncated, MatchesGramEigenvalues) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix m = oracle::random_matrix(8, 6, seed);
    const SvdResult svd = svd_truncated(m, 4);
    const Vector ref = oracle::gram_singular_values(m);
    for (Eigen::Index k = 0; k < 4; ++k) EXPECT_NEAR(svd.singular_values(k), ref(k), 1e-9);
    EXPECT_TRUE(orthonormal_columns(svd.right_modes, 1e-10));
    EXPECT_TRUE(orthonormal_columns(svd.left_modes, 1e-10));
  }
}

TEST(SvdTruncated, EckartYoungReconstruction) {
  const Matrix m = oracle::random_matrix(12, 9, 5);
  const SvdResult svd = svd_truncated(m, 4);
  const Matrix approx = svd.left_modes * svd.singular_values.asDiagonal() * svd.right_modes.transpose();
  Eigen::JacobiSVD<Matrix> full(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix best = full.matrixU().leftCols(4) * full.singularValues().head(4).asDiagonal() *
                      full.matrixV().leftCols(4).transpose();
  EXPECT_LE((approx - best).norm() / best.norm(), 1e-8);
}

TEST(SvdTruncated, Errors) {
  const Matrix m = oracle::random_matrix(4, 3, 1);
  EXPECT_EQ(code_of([&] { svd_truncated(m, 0); }), ErrorCode::InvalidRank);
  EXPECT_EQ(code_of([&] { svd_truncated(m, 4); }), ErrorCode::InvalidRank);
  Matrix bad = m;
  bad(1, 1) = std::nan("");
  EXPECT_EQ(code_of([&] { svd_truncated(bad, 2); }), ErrorCode::InvalidInput);
}

// ---- qr_pivot_greedy ----

TEST(QrPivot, HandExample) {
  Matrix m(2, 3);
  m << 1, 0, 0, 0, 2, 0;
  const PivotTrace t = qr_pivot_greedy(m, 2);
  EXPECT_EQ(t.pivots, (std::vector<Index>{1, 0}));
  EXPECT_NEAR(t.step_norms[0], 2.0, 1e-15);
  EXPECT_NEAR(t.step_norms[1], 1.0, 1e-15);
}

TEST(QrPivot, SingleNonzeroColumn) {
  Matrix m = Matrix::Zero(3, 5);
  m.col(3) << 1, -2, 0.5;
  EXPECT_EQ(qr_pivot_greedy(m, 1).pivots, (std::vector<Index>{3}));
}

TEST(QrPivot, StepOptimalityAgainstFromScratchResiduals) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix m = oracle::random_matrix(8, 20, 100 + seed);
    const PivotTrace t = qr_pivot_greedy(m, 8);
    for (std::size_t k = 0; k < t.pivots.size(); ++k) {
      const Vector res = oracle::residual_norms(m, std::span(t.pivots).first(k));
      double best = 0.0;
      for (Eigen::Index j = 0; j < res.size(); ++j) {
        if (std::find(t.pivots.begin(), t.pivots.begin() + static_cast<long>(k), static_cast<Index>(j)) ==
            t.pivots.begin() + static_cast<long>(k)) {
          best = std::max(best, res(j));
        }
      }
      EXPECT_NEAR(res(static_cast<Eigen::Index>(t.pivots[k])), best, 1e-10) << "seed " << seed << " step " << k;
      EXPECT_NEAR(t.step_norms[k], best, 1e-10);
      if (k > 0) { EXPECT_LE(t.step_norms[k], t.step_norms[k - 1] + 1e-12); }
    }
  }
}

TEST(QrPivot, ScaleInvariance) {
  const Matrix m = oracle::random_matrix(6, 30, 9);
  const auto base = qr_pivot_greedy(m, 6).pivots;
  for (const double c : {1e-6, 0.3, 7.0, 1e5}) EXPECT_EQ(qr_pivot_greedy(c * m, 6).pivots, base);
}

TEST(QrPivot, TiesGoToLowestIndex) {
  Matrix m(2, 4);
  m << 1, 0, 1, 0, 0, 1, 0, 1;
  EXPECT_EQ(qr_pivot_greedy(m, 2).pivots, (std::vector<Index>{0, 1}));
}

TEST(QrPivot, UniquePivotsPastRank) {
  const Matrix m = oracle::random_matrix(3, 10, 4);
  const PivotTrace t = qr_pivot_greedy(m, 10);
  std::vector<Index> sorted = t.pivots;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (const Index i : t.pivots) EXPECT_LT(i, 10u);
}

TEST(QrPivot, ModifierSteersSelection) {
  const Matrix m = oracle::random_matrix(4, 8, 3);
  const auto plain = qr_pivot_greedy(m, 1).pivots;
  const Index banned = plain[0];
  const PivotTrace t = qr_pivot_greedy(m, 4, [banned](std::size_t, std::span<double> norms, std::span<const Index>) {
    norms[banned] = 0.0;
  });
  EXPECT_EQ(std::count(t.pivots.begin(), t.pivots.end(), banned), 0);
}

TEST(QrPivot, AllModifiedZeroIsInfeasible) {
  const Matrix m = oracle::random_matrix(4, 8, 3);
  try {
    qr_pivot_greedy(m, 3, [](std::size_t step, std::span<double> norms, std::span<const Index>) {
      if (step == 2) std::fill(norms.begin(), norms.end(), 0.0);
    });
    FAIL() << "expected InfeasibleConstraintError";
  } catch (const InfeasibleConstraintError& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleConstraint);
    EXPECT_EQ(e.partial_pivots().size(), 2u);
  }
}

TEST(QrPivot, CountErrors) {
  const Matrix m = oracle::random_matrix(3, 4, 1);
  EXPECT_EQ(code_of([&] { qr_pivot_greedy(m, 5); }), ErrorCode::InvalidCount);
  EXPECT_EQ(code_of([&] { qr_pivot_greedy(m, 0); }), ErrorCode::InvalidCount);
}

// ---- spd_solve / pseudoinverse ----

TEST(SpdSolve, Examples) {
  const Matrix rhs = oracle::random_matrix(3, 2, 1);
  EXPECT_LE((spd_solve(Matrix::Identity(3, 3), rhs) - rhs).norm(), 1e-15);
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4;
  d(1, 1) = 9;
  Matrix b(2, 1);
  b << 8, 27;
  const Matrix z = spd_solve(d, b);
  EXPECT_NEAR(z(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(z(1, 0), 3.0, 1e-14);
}

TEST(SpdSolve, MultiplyBack) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Matrix b = oracle::random_matrix(5, 5, seed);
    const Matrix m = b.transpose() * b + Matrix::Identity(5, 5);
    const Matrix rhs = oracle::random_matrix(5, 3, seed + 50);
    const Matrix z = spd_solve(m, rhs);
    EXPECT_LE((m * z - rhs).norm() / rhs.norm(), 1e-10);
  }
}

TEST(SpdSolve, Errors) {
  Matrix indefinite(2, 2);
  indefinite << 1, 0, 0, -1;
  EXPECT_EQ(code_of([&] { spd_solve(indefinite, Matrix::Ones(2, 1)); }), ErrorCode::NotPositiveDefinite);
  Matrix asym(2, 2);
  asym << 2, 1, 0, 2;
  EXPECT_EQ(code_of([&] { spd_solve(asym, Matrix::Ones(2, 1)); }), ErrorCode::InvalidInput);
}

TEST(SpdLogDet, MatchesLu) {
  const Matrix b = oracle::random_matrix(6, 6, 8);
  const Matrix m = b.transpose() * b + 0.5 * Matrix::Identity(6, 6);
  EXPECT_NEAR(spd_log_det(m), oracle::log_det(m), 1e-10);
}

TEST(Pseudoinverse, Examples) {
  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 2;
  const Matrix pd = pseudoinverse(d);
  EXPECT_NEAR(pd(0, 0), 0.5, 1e-15);
  EXPECT_NEAR(pd(1, 1), 0.0, 1e-15);
  const Matrix q = oracle::random_orthonormal(6, 3, 2);
  EXPECT_LE((pseudoinverse(q) - q.transpose()).norm(), 1e-12);
}

TEST(Pseudoinverse, PenroseConditions) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Matrix m = oracle::random_matrix(4, 6, seed);
    const Matrix x = pseudoinverse(m);
    EXPECT_LE((m * x * m - m).norm(), 1e-8);
    EXPECT_LE((x * m * x - x).norm(), 1e-8);
    EXPECT_LE(((m * x).transpose() - m * x).norm(), 1e-8);
    EXPECT_LE(((x * m).transpose() - x * m).norm(), 1e-8);
  }
}

TEST(Pseudoinverse, RankDeficientInput) {
  const Matrix u = oracle::random_matrix(5, 2, 7);
  const Matrix m = u * oracle::random_matrix(2, 4, 8);  // rank 2
  const Matrix x = pseudoinverse(m);
  EXPECT_LE((m * x * m - m).norm(), 1e-8);
  EXPECT_EQ(numerical_rank(m, 1e-10), 2u);
}

// ---- basis ----

TEST(Basis, SnapshotValidation) {
  EXPECT_EQ(code_of([] { SnapshotMatrix(Matrix(0, 3)); }), ErrorCode::InvalidInput);
  Matrix bad = Matrix::Ones(2, 2);
  bad(0, 1) = std::numeric_limits<double>::infinity();
  EXPECT_EQ(code_of([&] { SnapshotMatrix{bad}; }), ErrorCode::InvalidInput);
}

TEST(Basis, Identity) {
  const BasisModes b3 = fit_identity(SnapshotMatrix(oracle::random_matrix(4, 3, 1)));
  EXPECT_EQ(b3.modes, Matrix(Matrix::Identity(3, 3)));
  EXPECT_EQ(b3.kind, BasisKind::Identity);
  EXPECT_FALSE(b3.singular_values.has_value());
  const BasisModes b1 = fit_identity(SnapshotMatrix(Matrix::Ones(2, 1)));
  EXPECT_EQ(b1.modes(0, 0), 1.0);
}

TEST(Basis, SvdRankOneRows) {
  Vector v(4);
  v << 1, 2, 2, 4;
  v.normalize();
  const Index n_snap = 9;
  Matrix x(n_snap, 4);
  x.rowwise() = v.transpose();
  const BasisModes b = fit_svd(SnapshotMatrix(x), 1);
  EXPECT_NEAR(std::abs(b.modes.col(0).dot(v)), 1.0, 1e-12);
  EXPECT_NEAR((*b.singular_values)(0), 3.0, 1e-12);
  const GaussianPrior prior = decreasing_prior(SnapshotMatrix(x.topRows(4)), 1, 0.1);
  EXPECT_NEAR(prior.prior_std()(0), 1.0, 1e-12);
  EXPECT_EQ(prior.noise(), 0.1);
}

TEST(Basis, SvdOfIdentityData) {
  const BasisModes b = fit_svd(SnapshotMatrix(Matrix::Identity(5, 5)), 5);
  for (Eigen::Index k = 0; k < 5; ++k) EXPECT_NEAR((*b.singular_values)(k), 1.0, 1e-12);
  EXPECT_TRUE(orthonormal_columns(b.modes, 1e-10));
  EXPECT_LE((b.modes.cwiseAbs().colwise().maxCoeff().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Basis, SvdMatchesFullSvdSubspace) {
  const Matrix x = oracle::random_matrix(20, 15, 3);
  const BasisModes b = fit_svd(SnapshotMatrix(x), 5);
  Eigen::JacobiSVD<Matrix> full(x, Eigen::ComputeThinV);
  const Matrix ref = full.matrixV().leftCols(5);
  // Largest principal angle from the smallest singular value of ref^T psi.
  const Vector cosines = Eigen::JacobiSVD<Matrix>(ref.transpose() * b.modes).singularValues();
  EXPECT_LE(std::acos(std::min(1.0, cosines.minCoeff())), 1e-8);
  EXPECT_TRUE(orthonormal_columns(b.modes, 1e-10));
  for (Eigen::Index k = 1; k < 5; ++k) EXPECT_LE((*b.singular_values)(k), (*b.singular_values)(k - 1));
}

TEST(Basis, SvdProjectionOptimality) {
  const Matrix x = oracle::random_matrix(30, 12, 6);
  const BasisModes b = fit_svd(SnapshotMatrix(x), 4);
  const double err = (x - x * b.modes * b.modes.transpose()).norm();
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix q = oracle::random_orthonormal(12, 4, 1000 + seed);
    EXPECT_LE(err, (x - x * q * q.transpose()).norm() + 1e-8);
  }
}

TEST(Basis, SvdRankErrors) {
  const SnapshotMatrix x(oracle::random_matrix(3, 5, 1));
  EXPECT_EQ(code_of([&] { fit_svd(x, 0); }), ErrorCode::InvalidRank);
  EXPECT_EQ(code_of([&] { fit_svd(x, 4); }), ErrorCode::InvalidRank);
}

TEST(Basis, RandomProjection) {
  const BasisModes a = fit_random_projection(40, 6, 17), b = fit_random_projection(40, 6, 17);
  EXPECT_EQ(a.modes, b.modes);
  EXPECT_NE(a.modes, fit_random_projection(40, 6, 18).modes);
  const BasisModes big = fit_random_projection(500, 500, 3);
  for (Eigen::Index j = 0; j < 500; ++j) EXPECT_NEAR(big.modes.col(j).norm(), 1.0, 0.1);
  // Entries have std 1/sqrt(r); the sample mean of n r of them has std 1/(sqrt(r) sqrt(n r)).
  const double mean = big.modes.mean();
  EXPECT_LE(std::abs(mean), 3.0 / (std::sqrt(500.0) * 500.0));
}

TEST(Basis, Custom) {
  const Matrix modes = oracle::random_matrix(10, 3, 2);
  const BasisModes b = fit_custom(modes);
  EXPECT_EQ(b.modes, modes);  // stored verbatim
  EXPECT_EQ(b.kind, BasisKind::Custom);
  Matrix dup = modes;
  dup.col(2) = dup.col(0);
  EXPECT_EQ(code_of([&] { fit_custom(dup); }), ErrorCode::RankDeficientBasis);
}

TEST(Basis, CustomSvdModesGiveSamePivots) {
  const SnapshotMatrix x(oracle::random_matrix(25, 40, 12));
  const BasisModes svd = fit_svd(x, 6);
  const BasisModes custom = fit_custom(svd.modes);
  EXPECT_EQ(qr_pivot_greedy(svd.modes.transpose(), 6).pivots, qr_pivot_greedy(custom.modes.transpose(), 6).pivots);
}

TEST(Basis, DecreasingPrior) {
  const SnapshotMatrix x(oracle::random_matrix(16, 10, 4));
  const GaussianPrior prior = decreasing_prior(x, 5, 0.2);
  const Vector ref = oracle::gram_singular_values(x.data()) / 4.0;
  for (Eigen::Index k = 0; k < 5; ++k) {
    EXPECT_NEAR(prior.prior_std()(k), ref(k), 1e-9);
    if (k > 0) { EXPECT_LE(prior.prior_std()(k), prior.prior_std()(k - 1)); }
  }
  Matrix rank1(4, 3);
  rank1.rowwise() = Eigen::RowVector3d(1, 0, 0);
  EXPECT_EQ(code_of([&] { decreasing_prior(SnapshotMatrix(rank1), 2, 1.0); }), ErrorCode::DegeneratePrior);
}

TEST(Basis, PriorValidationAndFlat) {
  const GaussianPrior flat = GaussianPrior::flat(100, 1000.0, 1.0);
  EXPECT_EQ(flat.size(), 100u);
  EXPECT_EQ(flat.prior_std().minCoeff(), 1000.0);
  EXPECT_EQ(code_of([] { GaussianPrior(Vector::Constant(2, 0.0), 1.0); }), ErrorCode::DegeneratePrior);
  EXPECT_EQ(code_of([] { GaussianPrior(Vector::Constant(2, 1.0), -1.0); }), ErrorCode::DegeneratePrior);
}
