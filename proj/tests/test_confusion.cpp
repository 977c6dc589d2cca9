#include <gtest/gtest.h>

#include <cmath>

#include "percheck/confusion.h"
#include "percheck/error.h"
#include "percheck/io.h"
#include "support.h"

using namespace percheck;
using confusion::Entry;
using confusion::Rational;

namespace {

Errc code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::IoError;
}

std::vector<std::vector<Entry>> to_entries(const std::vector<std::vector<double>>& m) {
    std::vector<std::vector<Entry>> out;
    for (const auto& row : m) out.emplace_back(row.begin(), row.end());
    return out;
}

}  // namespace

TEST(Confusion, Cm1EntriesAreExactFifteenths) {
    const auto cm = confusion::cm1();
    ASSERT_TRUE(cm.entry(0, 0).exact);
    EXPECT_EQ(*cm.entry(0, 0).exact, Rational(10, 15));
    EXPECT_EQ(*cm.entry(1, 1).exact, Rational(11, 15));
    EXPECT_EQ(*cm.entry(2, 0).exact, Rational(3, 15));
    for (std::size_t j = 0; j < 3; ++j) {
        Rational sum(0);
        for (std::size_t i = 0; i < 3; ++i) sum += *cm.entry(i, j).exact;
        EXPECT_EQ(sum, Rational(1));
    }
    EXPECT_EQ(cm.labels()[0].name, "ped");
    EXPECT_EQ(cm.index_of("empty"), 2u);
}

TEST(Confusion, RecallOfObjIsElevenFifteenths) {
    const auto cm = confusion::cm1();
    EXPECT_NEAR(confusion::recall(cm, cm.index_of("obj")), 11.0 / 15.0, 1e-15);
    EXPECT_NEAR(confusion::recall(cm, 0), 10.0 / 15.0, 1e-15);
}

TEST(Confusion, SizeWeightedPrecisionOfPedWithEqualSizes) {
    // 10/15 / (10/15 + (2/15 + 3/15) / 2) = 20/25
    EXPECT_NEAR(confusion::precision_size_weighted(confusion::cm1(), 0, confusion::ClassSizes::equal(3)), 0.8, 1e-12);
}

TEST(Confusion, SizeWeightedPrecisionLimitFollowsTheLargeClass) {
    const auto cm = confusion::cm1();
    const double got = confusion::precision_size_weighted(cm, 0, confusion::ClassSizes({1, 1, 1e9}));
    const double w = 1.0 / (1.0 + 1e9);
    const double direct = cm(0, 0) / (cm(0, 0) + cm(0, 1) * w + cm(0, 2) * (1.0 - w));
    EXPECT_NEAR(got, direct, 1e-12);
    EXPECT_NEAR(got, cm(0, 0) / (cm(0, 0) + cm(0, 2)), 1e-8);
}

TEST(Confusion, StandardPrecisionOfPedIsTwoThirds) {
    EXPECT_NEAR(confusion::precision_standard(confusion::cm1(), 0), 10.0 / 15.0, 1e-12);
}

TEST(Confusion, IdentityHasPerfectMetrics) {
    const auto id = confusion::identity(confusion::env_labels());
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(confusion::recall(id, i), 1.0);
        EXPECT_EQ(confusion::precision_standard(id, i), 1.0);
        EXPECT_EQ(confusion::precision_size_weighted(id, i, confusion::ClassSizes({3, 7, 11})), 1.0);
    }
}

TEST(Confusion, ValidateRejectsBadMatrices) {
    const auto labels = confusion::env_labels();
    EXPECT_EQ(code_of([&] { confusion::ConfusionMatrix::validate(to_entries({{0.5, 0.5}, {0.5, 0.5}}), labels); }),
              Errc::DimensionMismatch);
    EXPECT_EQ(code_of([&] { confusion::ConfusionMatrix::validate(to_entries({{1, 0, 0}, {0, 1, 0}, {0, 0, 0.9}}), labels); }),
              Errc::ColumnNotStochastic);
    EXPECT_EQ(code_of([&] { confusion::ConfusionMatrix::validate(to_entries({{1.1, 0, 0}, {-0.1, 1, 0}, {0, 0, 1}}), labels); }),
              Errc::NegativeEntry);
    EXPECT_EQ(code_of([&] { confusion::ConfusionMatrix::validate(to_entries({{1, 0}, {0, 1}}), {"a", "a"}); }), Errc::InvalidLabel);
    EXPECT_EQ(code_of([&] { confusion::ConfusionMatrix::validate(to_entries({{1}}), {"a"}); }), Errc::DimensionMismatch);
}

TEST(Confusion, ValidateAcceptsColumnsWithinTolerance) {
    const auto cm = confusion::ConfusionMatrix::validate(to_entries({{0.5 + 4e-10, 0.0}, {0.5, 1.0}}), {"a", "b"});
    EXPECT_NEAR(cm.column_sum(0), 1.0, 1e-9);
}

TEST(Confusion, ExactColumnsMustSumExactly) {
    std::vector<std::vector<Entry>> rows = {{Rational(1, 3), Rational(0)}, {Rational(2, 3), Rational(1)}};
    EXPECT_NO_THROW(confusion::ConfusionMatrix::validate(rows, {"a", "b"}));
    rows[0][0] = Rational(333333333, 1000000000);
    EXPECT_EQ(code_of([&] { confusion::ConfusionMatrix::validate(rows, {"a", "b"}); }), Errc::ColumnNotStochastic);
}

TEST(Confusion, MetricErrors) {
    const auto cm = confusion::cm1();
    EXPECT_EQ(code_of([&] { confusion::recall(cm, 3); }), Errc::IndexOutOfRange);
    EXPECT_EQ(code_of([&] { cm.index_of("cyclist"); }), Errc::IndexOutOfRange);
    EXPECT_EQ(code_of([&] { confusion::precision_size_weighted(cm, 0, confusion::ClassSizes({5, 0, 0})); }), Errc::EmptyOffClassPartition);
    EXPECT_EQ(code_of([&] { confusion::precision_standard(cm, 0, {0.5, 0.5, 0.5}); }), Errc::WeightsNotNormalized);
    EXPECT_EQ(code_of([&] { confusion::ClassSizes({1, -1, 1}); }), Errc::NegativeEntry);
    EXPECT_EQ(code_of([&] { confusion::precision_size_weighted(cm, 0, confusion::ClassSizes({1, 1})); }), Errc::DimensionMismatch);
}

TEST(Confusion, FromPrecisionRecallTable) {
    const auto cm = confusion::from_precision_recall(0.8, 0.8);
    const double expected[3][3] = {{0.8, 0.1, 0.1}, {0.1, 0.72, 0.18}, {0.1, 0.18, 0.72}};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) EXPECT_NEAR(cm(i, j), expected[i][j], 1e-15) << i << "," << j;
    }
    EXPECT_NEAR(confusion::precision_standard(cm, 0), 0.8, 1e-12);
}

TEST(Confusion, PerfectPairIsPerfectOnlyForPed) {
    // TN = 2 still spreads 4/10 and 1/10 over the obj/empty block.
    const auto cm = confusion::from_precision_recall(1.0, 1.0);
    const double expected[3][3] = {{1, 0, 0}, {0, 0.8, 0.2}, {0, 0.2, 0.8}};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) EXPECT_DOUBLE_EQ(cm(i, j), expected[i][j]);
    }
    EXPECT_FALSE(cm == confusion::identity(confusion::env_labels()));
}

TEST(Confusion, InfeasiblePairs) {
    EXPECT_FALSE(confusion::feasible_pair(0.2, 0.9));
    EXPECT_EQ(code_of([] { confusion::from_precision_recall(0.2, 0.9); }), Errc::InfeasiblePair);
    EXPECT_EQ(code_of([] { confusion::from_precision_recall(0.0, 0.5); }), Errc::InfeasiblePair);
    EXPECT_EQ(code_of([] { confusion::from_precision_recall(0.5, 1.5); }), Errc::InfeasiblePair);
    EXPECT_TRUE(confusion::feasible_pair(1.0 / 3.0, 1.0));  // FP = 2 exactly
}

TEST(Confusion, RoundTripOverGrid) {
    int checked = 0;
    for (int a = 1; a <= 12; ++a) {
        for (int b = 1; b <= 12; ++b) {
            const double p = 0.3 + 0.7 * a / 12.0;
            const double r = b / 12.0;
            if (!confusion::feasible_pair(p, r)) continue;
            const auto cm = confusion::from_precision_recall(p, r);
            EXPECT_NEAR(confusion::precision_standard(cm, 0), p, 1e-12);
            EXPECT_NEAR(confusion::recall(cm, 0), r, 1e-12);
            EXPECT_EQ(cm(1, 2), cm(2, 1));
            EXPECT_EQ(cm(1, 1), cm(2, 2));
            for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(cm.column_sum(j), 1.0, 1e-9);
            ++checked;
        }
    }
    EXPECT_GE(checked, 100);
}

TEST(Confusion, SizeWeightedPrecisionDiffersFromStandardForCmPr) {
    // With equal sizes the size-weighted form gives 2p / (1 + p) on CM(p,r).
    for (double p : {0.5, 0.8, 0.95}) {
        const auto cm = confusion::from_precision_recall(p, 0.7);
        EXPECT_NEAR(confusion::precision_size_weighted(cm, 0, confusion::ClassSizes::equal(3)), 2 * p / (1 + p), 1e-12);
    }
}

TEST(Confusion, RecallEqualsDiagonalOnRandomMatrices) {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + trial % 4;
        std::vector<std::vector<double>> m(n, std::vector<double>(n));
        for (std::size_t j = 0; j < n; ++j) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) total += m[i][j] = u(rng);
            for (std::size_t i = 0; i < n; ++i) m[i][j] /= total;
        }
        std::vector<std::string> labels;
        for (std::size_t i = 0; i < n; ++i) labels.push_back("c" + std::to_string(i));
        const auto cm = confusion::ConfusionMatrix::validate(to_entries(m), labels);
        for (std::size_t i = 0; i < n; ++i) {
            EXPECT_NEAR(confusion::recall(cm, i), cm(i, i), 1e-12);
            EXPECT_NEAR(cm.column_sum(i), 1.0, 1e-9);
        }
    }
}

TEST(Confusion, ParseEntry) {
    EXPECT_EQ(*confusion::parse_entry("10/15").exact, Rational(2, 3));
    EXPECT_DOUBLE_EQ(confusion::parse_entry(" 0.25 ").value, 0.25);
    EXPECT_FALSE(confusion::parse_entry("0.25").exact);
    EXPECT_THROW(confusion::parse_entry("1/0"), Error);
    EXPECT_THROW(confusion::parse_entry("abc"), Error);
}

TEST(Confusion, JsonFileMatchesBuiltin) {
    EXPECT_EQ(io::load_confusion(testsupport::data("cm1.json")), confusion::cm1());
    const auto transposed = io::load_confusion(testsupport::data("cm1_rows.json"));
    EXPECT_EQ(transposed(0, 1), confusion::cm1()(1, 0));
    EXPECT_EQ(transposed(1, 2), confusion::cm1()(2, 1));
}
