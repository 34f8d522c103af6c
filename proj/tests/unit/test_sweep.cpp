#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rxnc/sweep.hpp"

using namespace rxnc;

namespace {

// One and two rounds leave a constant right-branch RX-difference.
TEST(Sweep, DeterministicDifferenceGivesMaximalAdvantage) {
    for (int r : {1, 2}) {
        EXPECT_DOUBLE_EQ(collision_advantage(CipherId::Simon32_64, {15, 0x3}, r, 500, 1), 65535.0);
        EXPECT_DOUBLE_EQ(collision_advantage(CipherId::Simeck32_64, {1, 0x4}, r, 500, 1), 65535.0);
    }
}

TEST(Sweep, ManyRoundsLookUniform) {
    const double a = collision_advantage(CipherId::Simon32_64, {15, 0x3}, 20, 20000, 2);
    // Pairs: ~2e8, expected collisions ~3052, standard error ~0.02 in advantage units.
    EXPECT_LT(std::abs(a), 0.1);
}

TEST(Sweep, RejectsBadArguments) {
    EXPECT_THROW(collision_advantage(CipherId::Simon32_64, {15, 0x3}, 0, 10, 0), std::invalid_argument);
    EXPECT_THROW(collision_advantage(CipherId::Simon32_64, {15, 0x3}, 5, 1, 0), std::invalid_argument);
}

TEST(Sweep, RankingSortedAndWorkerIndependent) {
    const std::vector<HalfRxDifference> c{{15, 0x3}, {1, 0x6}, {8, 0x8001}, {4, 0x22}, {13, 0x2}};
    const auto a = rank_by_proxy(CipherId::Simon32_64, c, 6, 3000, 7, 1);
    const auto b = rank_by_proxy(CipherId::Simon32_64, c, 6, 3000, 7, 3);
    ASSERT_EQ(a.size(), c.size());
    EXPECT_TRUE(std::is_sorted(a.begin(), a.end(), [](const SweepEntry& x, const SweepEntry& y) { return x.proxy > y.proxy; }));
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].d, b[i].d);
        EXPECT_EQ(a[i].proxy, b[i].proxy);
    }
}

}  // namespace
