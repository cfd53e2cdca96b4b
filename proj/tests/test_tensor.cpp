#include "test_support.hpp"
#include "ttb/errors.hpp"
#include "ttb/linalg.hpp"
#include "ttb/tensor.hpp"
#include "ttb/tensor_io.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

using namespace ttb;
using namespace ttb::testing;

TEST(DenseTensor, LayoutIsFirstIndexFastest) {
    DenseTensor t({2, 3, 4});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
    const std::vector<std::size_t> idx{1, 2, 3};
    EXPECT_EQ(t.linear_index(idx), 1u + 2u * (2 + 3u * 3));
    EXPECT_EQ(t.at(idx), 23.0);
}

TEST(DenseTensor, RejectsBadShapes) {
    EXPECT_THROW(DenseTensor(Dims{}), ShapeError);
    EXPECT_THROW(DenseTensor(Dims{2, 0}), ShapeError);
    EXPECT_THROW(DenseTensor(Dims{2, 2}, std::vector<double>(3)), ShapeError);
    DenseTensor t({2, 2});
    const std::vector<std::size_t> bad{2, 0};
    EXPECT_THROW(t.at(bad), ShapeError);
}

TEST(MaskTensor, CountsObserved) {
    MaskTensor m({2, 2}, std::vector<std::uint8_t>{1, 0, 1, 1});
    EXPECT_EQ(m.observed_count(), 3u);
    EXPECT_DOUBLE_EQ(m.observed_fraction(), 0.75);
    EXPECT_EQ(m.observed_indices(), (std::vector<std::size_t>{0, 2, 3}));
    EXPECT_THROW(MaskTensor({2}, std::vector<std::uint8_t>{1, 2}), ShapeError);
}

TEST(TTContract, AllOnesCores) {
    TTCores tt;
    tt.cores = {CoreArray(1, 2, 2, 1.0), CoreArray(2, 2, 2, 1.0), CoreArray(2, 1, 2, 1.0)};
    const DenseTensor t = tt_contract(tt);
    EXPECT_EQ(t.dims(), (Dims{2, 2, 2}));
    for (double v : t.data()) EXPECT_EQ(v, 4.0);
}

TEST(TTContract, SingleCoreIsItsFiber) {
    TTCores tt;
    tt.cores = {CoreArray(1, 1, 5)};
    for (std::size_t j = 0; j < 5; ++j) tt.cores[0](0, 0, j) = 0.5 * static_cast<double>(j) - 1.0;
    const DenseTensor t = tt_contract(tt);
    ASSERT_EQ(t.dims(), (Dims{5}));
    for (std::size_t j = 0; j < 5; ++j) EXPECT_EQ(t[j], tt.cores[0](0, 0, j));
}

TEST(TTContract, RejectsRankMismatch) {
    TTCores tt;
    tt.cores = {CoreArray(1, 2, 2), CoreArray(3, 1, 2)};
    EXPECT_THROW(tt_contract(tt), ShapeError);
    tt.cores = {CoreArray(2, 1, 2)};
    EXPECT_THROW(tt_contract(tt), ShapeError);
}

// Property: matrix-product contraction equals the nested multi-sum on random
// TTs with D <= 4, dims <= 4, ranks <= 3.
TEST(TTContract, MatchesMultiSumOnRandomTTs) {
    Rng rng(101);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t D = uniform_int(rng, 1, 4);
        Dims dims(D);
        std::vector<std::size_t> ranks(D + 1, 1);
        for (auto& d : dims) d = uniform_int(rng, 1, 4);
        for (std::size_t i = 1; i < D; ++i) ranks[i] = uniform_int(rng, 1, 3);
        const TTCores tt = random_cores(rng, dims, ranks);
        const DenseTensor t = tt_contract(tt);
        double err = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto idx = unravel(i, dims);
            const double b = tt_element_bruteforce(tt.cores, idx);
            err = std::max(err, std::abs(t[i] - b));
            ref = std::max(ref, std::abs(b));
            EXPECT_NEAR(tt_element(tt, idx), b, 1e-10 * (1.0 + std::abs(b)));
        }
        EXPECT_LE(err, 1e-10 * std::max(ref, 1.0)) << "trial " << trial;
    }
}

TEST(Kron, Examples) {
    Eigen::MatrixXd a(1, 2), b(1, 2);
    a << 1, 2;
    b << 3, 4;
    Eigen::MatrixXd expect(1, 4);
    expect << 3, 4, 6, 8;
    EXPECT_EQ(kron(a, b), expect);
    EXPECT_EQ(kron(Eigen::MatrixXd::Identity(2, 2), Eigen::MatrixXd::Identity(3, 3)), Eigen::MatrixXd::Identity(6, 6));
}

// Property: (A1 A2 ... An) (x) (B1 ... Bn) = (A1 (x) B1) ... (An (x) Bn).
TEST(Kron, MixedProductChains) {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = uniform_int(rng, 2, 4);
        std::vector<std::size_t> da(n + 1), db(n + 1);
        for (auto& d : da) d = uniform_int(rng, 1, 3);
        for (auto& d : db) d = uniform_int(rng, 1, 3);
        Eigen::MatrixXd pa = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(da[0]), static_cast<Eigen::Index>(da[0]));
        Eigen::MatrixXd pb = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(db[0]), static_cast<Eigen::Index>(db[0]));
        Eigen::MatrixXd pk = kron(pa, pb);
        for (std::size_t i = 0; i < n; ++i) {
            Eigen::MatrixXd a(static_cast<Eigen::Index>(da[i]), static_cast<Eigen::Index>(da[i + 1]));
            Eigen::MatrixXd b(static_cast<Eigen::Index>(db[i]), static_cast<Eigen::Index>(db[i + 1]));
            for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = rng.normal();
            for (Eigen::Index k = 0; k < b.size(); ++k) b.data()[k] = rng.normal();
            pa = pa * a;
            pb = pb * b;
            pk = pk * kron(a, b);
        }
        const Eigen::MatrixXd lhs = kron(pa, pb);
        EXPECT_LE((lhs - pk).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, lhs.cwiseAbs().maxCoeff()));
    }
}

TEST(Unfold, Examples) {
    DenseTensor m({2, 2}, {1, 2, 3, 4});
    Eigen::MatrixXd expect(2, 2);
    expect << 1, 3, 2, 4;
    EXPECT_EQ(unfold(m, 1), expect);

    DenseTensor t({2, 2, 2}, {1, 2, 3, 4, 5, 6, 7, 8});
    Eigen::MatrixXd e2(2, 4);
    e2 << 1, 3, 5, 7, 2, 4, 6, 8;
    EXPECT_EQ(unfold(t, 1), e2);
    EXPECT_THROW(unfold(t, 0), ShapeError);
    EXPECT_THROW(unfold(t, 3), ShapeError);
}

TEST(Unfold, LowRankTT) {
    Rng rng(3);
    const DenseTensor t = tt_contract(random_cores(rng, {4, 5, 3}, {1, 2, 2, 1}));
    EXPECT_LE(numerical_rank(unfold(t, 1)), 2u);
    EXPECT_LE(numerical_rank(unfold(t, 2)), 2u);
}

TEST(Unfold, RefoldRoundtripIsExact) {
    Rng rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t D = uniform_int(rng, 2, 5);
        Dims dims(D);
        for (auto& d : dims) d = uniform_int(rng, 1, 4);
        const DenseTensor t = random_tensor(rng, dims);
        for (std::size_t mode = 1; mode < D; ++mode) EXPECT_EQ(refold(unfold(t, mode), dims), t);
    }
}

TEST(MaskedResidual, Examples) {
    DenseTensor a({2}, {1, 2}), zero({2}, {0, 0});
    EXPECT_EQ(masked_residual_norm(a, zero, MaskTensor({2}, std::vector<std::uint8_t>{1, 0})), 1.0);
    EXPECT_EQ(masked_residual_norm(a, a, MaskTensor({2}, true)), 0.0);
    EXPECT_EQ(masked_residual_norm(a, zero, MaskTensor({2}, false)), 0.0);
    EXPECT_THROW(masked_residual_norm(a, DenseTensor({3}), MaskTensor({2}, true)), ShapeError);
}

// Property: adding observed entries never decreases the masked residual.
TEST(MaskedResidual, MonotoneInMask) {
    Rng rng(9);
    for (int trial = 0; trial < 100; ++trial) {
        const Dims dims{3, 4, 2};
        const DenseTensor a = random_tensor(rng, dims), y = random_tensor(rng, dims);
        MaskTensor m = random_mask_prob(rng, dims, 0.3);
        double prev = masked_residual_norm(a, y, m);
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (m.observed(i)) continue;
            m.set(i, true);
            const double now = masked_residual_norm(a, y, m);
            EXPECT_GE(now, prev);
            prev = now;
        }
    }
}

TEST(TensorIO, RoundtripsTensorsAndMasks) {
    Rng rng(11);
    const DenseTensor t = random_tensor(rng, {3, 1, 4});
    const std::string path = temp_path("roundtrip.ttn");
    save_tensor(path, t);
    EXPECT_EQ(load_tensor(path), t);

    const MaskTensor m = random_mask_prob(rng, {3, 1, 4}, 0.5);
    const std::string mpath = temp_path("roundtrip.ttm");
    save_mask(mpath, m);
    EXPECT_EQ(load_mask(mpath), m);
}

TEST(TensorIO, HeaderLayout) {
    DenseTensor t({2}, {1.5, -2.0});
    std::ostringstream out;
    write_tensor(out, t);
    const std::string s = out.str();
    ASSERT_EQ(s.size(), 4u + 4 + 4 + 16);
    EXPECT_EQ(s.substr(0, 4), "TTN1");
    EXPECT_EQ(static_cast<unsigned char>(s[4]), 1);
    EXPECT_EQ(static_cast<unsigned char>(s[8]), 2);
}

TEST(TensorIO, RejectsMalformedInput) {
    std::istringstream bad_magic("XXXX");
    EXPECT_THROW(read_tensor(bad_magic), FormatError);
    DenseTensor t({4}, {1, 2, 3, 4});
    std::ostringstream out;
    write_tensor(out, t);
    std::istringstream truncated(out.str().substr(0, out.str().size() - 3));
    EXPECT_THROW(read_tensor(truncated), FormatError);
    std::istringstream wrong_kind(out.str());
    EXPECT_THROW(read_mask(wrong_kind), FormatError);
    EXPECT_THROW(load_tensor(temp_path("does_not_exist.ttn")), FormatError);
}
