#include <doctest.h>

#include <cmath>
#include <numeric>

#include "divs/migration.hpp"
#include "divs/rng.hpp"

using namespace divs;

TEST_CASE("migration amount follows the floor rule") {
    CHECK(migration_amount(100.0, 100.0, 2.0) == 0);
    CHECK(migration_amount(100.0, 90.0, 2.0) == 5);
    // floor toward minus infinity: (100-105)/2 = -2.5 -> -3.
    CHECK(migration_amount(100.0, 105.0, 2.0) == -3);
    CHECK_THROWS(migration_amount(100.0, 100.0, 0.0));
}

TEST_CASE("balance metric is the RMS deviation") {
    CHECK(balance_metric({100.0, 100.0, 100.0}, 100.0) == 0.0);
    CHECK(balance_metric({90.0, 110.0}, 100.0) == doctest::Approx(10.0));
    CHECK(balance_metric({100.0, 100.0, 130.0}, 110.0) ==
          doctest::Approx(std::sqrt(200.0)));
    CHECK(balance_metric({100.0, 100.0, 130.0}, 110.0) == doctest::Approx(14.142135623));
    CHECK_THROWS(balance_metric({}, 0.0));
}

TEST_CASE("migration trigger is inclusive") {
    CHECK(!should_migrate(5.0, 10.0));
    CHECK(should_migrate(10.0, 10.0));
    CHECK(should_migrate(0.0, 0.0));
    CHECK_THROWS(should_migrate(1.0, -1.0));
}

TEST_CASE("candidate lists apply the xi filter") {
    SUBCASE("small emigration filtered out") {
        const auto lists = build_lists({{0, -1}, {1, 2}}, 1);
        CHECK(lists.out_list.empty());
        REQUIRE(lists.in_list.size() == 1);
        CHECK(lists.in_list[0].node_id == 1);
        CHECK(lists.in_list[0].amount == 2);
    }
    SUBCASE("both sides pass") {
        const auto lists = build_lists({{0, -5}, {1, 5}}, 1);
        REQUIRE(lists.out_list.size() == 1);
        REQUIRE(lists.in_list.size() == 1);
    }
    SUBCASE("all balanced") {
        const auto lists = build_lists({{0, 0}, {1, 0}}, 1);
        CHECK(lists.out_list.empty());
        CHECK(lists.in_list.empty());
    }
    SUBCASE("sorted by node id") {
        const auto lists = build_lists({{5, -9}, {2, -7}, {9, 4}, {1, 3}}, 1);
        REQUIRE(lists.out_list.size() == 2);
        CHECK(lists.out_list[0].node_id == 2);
        CHECK(lists.out_list[1].node_id == 5);
        REQUIRE(lists.in_list.size() == 2);
        CHECK(lists.in_list[0].node_id == 1);
        CHECK(lists.in_list[1].node_id == 9);
    }
}

TEST_CASE("matching follows the greedy max strategy") {
    SUBCASE("hand-traced example") {
        MigrationLists lists;
        lists.out_list = {{0, -10}};
        lists.in_list = {{1, 7}, {2, 4}};
        const auto plan = match_migrations(lists, 1);
        REQUIRE(plan.moves.size() == 2);
        CHECK(plan.moves[0].src == 0);
        CHECK(plan.moves[0].dst == 1);
        CHECK(plan.moves[0].frames == 7);
        CHECK(plan.moves[1].src == 0);
        CHECK(plan.moves[1].dst == 2);
        CHECK(plan.moves[1].frames == 3);
        CHECK(plan.residuals.at(0) == 0);
    }
    SUBCASE("exact pair via P2") {
        MigrationLists lists;
        lists.out_list = {{0, -5}};
        lists.in_list = {{1, 5}};
        const auto plan = match_migrations(lists, 1);
        REQUIRE(plan.moves.size() == 1);
        CHECK(plan.moves[0].src == 0);
        CHECK(plan.moves[0].dst == 1);
        CHECK(plan.moves[0].frames == 5);
        CHECK(plan.residuals.at(0) == 0);
        CHECK(plan.residuals.at(1) == 0);
    }
    SUBCASE("P2 residuals stay within xi") {
        MigrationLists lists;
        lists.out_list = {{0, -7}};
        lists.in_list = {{1, 5}};
        const auto plan = match_migrations(lists, 2);  // |-7+5| = 2 <= xi
        REQUIRE(plan.moves.size() == 1);
        CHECK(plan.moves[0].frames == 5);
        CHECK(std::llabs(plan.residuals.at(0)) <= 2);
        CHECK(std::llabs(plan.residuals.at(1)) <= 2);
    }
    SUBCASE("empty out list yields an empty plan") {
        MigrationLists lists;
        lists.in_list = {{1, 7}};
        const auto plan = match_migrations(lists, 1);
        CHECK(plan.moves.empty());
        CHECK(plan.residuals.at(1) == 7);
    }
    SUBCASE("ties break toward the lower node id") {
        MigrationLists lists;
        lists.out_list = {{0, -4}, {1, -4}};
        lists.in_list = {{2, 9}};
        const auto plan = match_migrations(lists, 1);
        REQUIRE(plan.moves.size() == 2);
        CHECK(plan.moves[0].src == 0);
        CHECK(plan.moves[1].src == 1);
    }
}

TEST_CASE("apply_plan moves frames and conserves the total") {
    const OwnershipCounts state{{0, 10}, {1, 2}};

    SUBCASE("empty plan leaves state untouched") {
        const auto next = apply_plan(state, {});
        CHECK(next == state);
    }
    SUBCASE("simple move") {
        MigrationPlan plan;
        plan.moves.push_back({0, 1, 3});
        const auto next = apply_plan(state, plan);
        CHECK(next.at(0) == 7);
        CHECK(next.at(1) == 5);
        long long before = 0, after = 0;
        for (const auto& [id, n] : state) before += n;
        for (const auto& [id, n] : next) after += n;
        CHECK(before == after);
    }
    SUBCASE("overdraw rejected") {
        MigrationPlan plan;
        plan.moves.push_back({0, 1, 11});
        CHECK_THROWS(apply_plan(state, plan));
    }
}

TEST_CASE("randomized end-to-end migration properties") {
    SeqRng rng(1717);
    int strict_improvements = 0;
    int fired = 0;
    const int trials = 200;

    for (int trial = 0; trial < trials; ++trial) {
        const int m = static_cast<int>(rng.integer(2, 20));
        std::vector<double> spf(static_cast<std::size_t>(m));
        std::vector<long long> frames(static_cast<std::size_t>(m));
        for (int j = 0; j < m; ++j) {
            spf[static_cast<std::size_t>(j)] = static_cast<double>(rng.integer(1, 10));
            frames[static_cast<std::size_t>(j)] = rng.integer(0, 100);
        }
        const long long xi = rng.integer(0, 3);

        std::vector<double> times(static_cast<std::size_t>(m));
        double t_sum = 0.0;
        for (int j = 0; j < m; ++j) {
            times[static_cast<std::size_t>(j)] =
                spf[static_cast<std::size_t>(j)] *
                static_cast<double>(frames[static_cast<std::size_t>(j)]);
            t_sum += times[static_cast<std::size_t>(j)];
        }
        const double t_bar = t_sum / m;
        const double balance_pre = balance_metric(times, t_bar);
        if (!should_migrate(balance_pre, 0.0)) continue;
        ++fired;

        std::map<int, long long> deltas;
        long long delta_sum = 0;
        double exact_sum = 0.0;
        for (int j = 0; j < m; ++j) {
            deltas[j] = migration_amount(t_bar, times[static_cast<std::size_t>(j)],
                                         spf[static_cast<std::size_t>(j)]);
            delta_sum += deltas[j];
            exact_sum += (t_bar - times[static_cast<std::size_t>(j)]) /
                         spf[static_cast<std::size_t>(j)];
        }
        // Each floor loses strictly less than one frame relative to the
        // exact amounts. (The exact amounts themselves only cancel when
        // every node shares one frame rate; see the homogeneous case below.)
        CHECK(static_cast<double>(delta_sum) > exact_sum - m);
        CHECK(static_cast<double>(delta_sum) <= exact_sum + 1e-9);

        const auto lists = build_lists(deltas, xi);
        const auto plan = match_migrations(lists, xi);

        // Termination/size bound: one node retires per move beyond P2 pairs.
        CHECK(plan.moves.size() <= lists.out_list.size() + lists.in_list.size());

        // Move quotas: per-node totals stay within the matched amounts.
        std::map<int, long long> sent, received;
        for (const auto& mv : plan.moves) {
            CHECK(mv.frames > 0);
            sent[mv.src] += mv.frames;
            received[mv.dst] += mv.frames;
        }
        for (const auto& c : lists.out_list) {
            CHECK(sent[c.node_id] <= -c.amount);
        }
        for (const auto& c : lists.in_list) {
            CHECK(received[c.node_id] <= c.amount);
        }

        // Apply and check conservation plus the balance improvement bound.
        OwnershipCounts before;
        for (int j = 0; j < m; ++j) before[j] = frames[static_cast<std::size_t>(j)];
        const auto after = apply_plan(before, plan);
        long long total_before = 0, total_after = 0;
        for (const auto& [id, n] : before) total_before += n;
        for (const auto& [id, n] : after) total_after += n;
        CHECK(total_before == total_after);

        std::vector<double> times_post(static_cast<std::size_t>(m));
        double post_sum = 0.0;
        double max_spf = 0.0;
        for (int j = 0; j < m; ++j) {
            times_post[static_cast<std::size_t>(j)] =
                spf[static_cast<std::size_t>(j)] * static_cast<double>(after.at(j));
            post_sum += times_post[static_cast<std::size_t>(j)];
            max_spf = std::max(max_spf, spf[static_cast<std::size_t>(j)]);
        }
        const double balance_post = balance_metric(times_post, post_sum / m);
        CHECK(balance_post <= balance_pre + max_spf);
        if (balance_post < balance_pre) ++strict_improvements;
    }

    // The greedy matcher should almost always strictly improve balance.
    CHECK(fired > 0);
    CHECK(static_cast<double>(strict_improvements) >= 0.95 * static_cast<double>(fired));
}

TEST_CASE("floored deltas nearly cancel on a shared frame rate") {
    SeqRng rng(2424);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = static_cast<int>(rng.integer(2, 20));
        const double spf = static_cast<double>(rng.integer(1, 10));
        std::vector<double> times;
        double t_sum = 0.0;
        for (int j = 0; j < m; ++j) {
            times.push_back(spf * static_cast<double>(rng.integer(0, 100)));
            t_sum += times.back();
        }
        const double t_bar = t_sum / m;
        long long delta_sum = 0;
        for (int j = 0; j < m; ++j) {
            delta_sum += migration_amount(t_bar, times[static_cast<std::size_t>(j)], spf);
        }
        CHECK(std::llabs(delta_sum) <= m);
    }
}
