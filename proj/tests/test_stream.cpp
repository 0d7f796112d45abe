#include <doctest.h>

#include <numeric>
#include <set>

#include "divs/rng.hpp"
#include "divs/stream.hpp"

using namespace divs;

namespace {

MonitoringTerminal mt_with_alpha(int id, int alpha) {
    MonitoringTerminal mt;
    mt.id = id;
    mt.frames_per_unit_time = alpha;
    mt.parent_en = 0;
    return mt;
}

}  // namespace

TEST_CASE("window_stream produces units*alpha frames in sequence order") {
    const TensorShape shape{1, 4, 4};
    const auto one_unit = window_stream(mt_with_alpha(0, 6), 1, shape, 42);
    REQUIRE(one_unit.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(one_unit[static_cast<std::size_t>(i)].seq == i);

    CHECK(window_stream(mt_with_alpha(0, 6), 7, shape, 42).size() == 42);
    CHECK_THROWS(window_stream(mt_with_alpha(0, 6), 0, shape, 42));
}

TEST_CASE("frame tensors are reproducible and keyed by terminal") {
    const TensorShape shape{2, 3, 3};
    const auto a = window_stream(mt_with_alpha(3, 4), 1, shape, 7);
    const auto b = window_stream(mt_with_alpha(3, 4), 1, shape, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].tensor == b[i].tensor);

    const auto other_mt = window_stream(mt_with_alpha(4, 4), 1, shape, 7);
    CHECK(a[0].tensor != other_mt[0].tensor);
    const auto other_seed = window_stream(mt_with_alpha(3, 4), 1, shape, 8);
    CHECK(a[0].tensor != other_seed[0].tensor);

    for (const auto& f : a) {
        for (double v : f.tensor.data()) {
            CHECK(v >= 0.0);
            CHECK(v < 1.0);
        }
    }
}

TEST_CASE("batch plan follows k_j = N_j*alpha/b") {
    TopologySpec spec;
    spec.terminals = 40;
    spec.levels = {{4, {0.01}}};

    SUBCASE("uniform assignment") {
        const Topology t = build_topology(spec);
        const auto plans = make_batch_plan(t, 6, 3);
        REQUIRE(plans.size() == 4);
        for (const auto& p : plans) {
            CHECK(p.terminal_count == 10);
            CHECK(p.batch_size == doctest::Approx(20.0));
            CHECK(p.mean_batch_size == doctest::Approx(20.0));
        }
    }
    SUBCASE("skewed assignment") {
        spec.explicit_assignment = {13, 9, 9, 9};
        const Topology t = build_topology(spec);
        const auto plans = make_batch_plan(t, 6, 3);
        CHECK(plans[0].batch_size == doctest::Approx(26.0));
        CHECK(plans[0].mean_batch_size == doctest::Approx(20.0));
    }
    SUBCASE("single batch holds everything") {
        const Topology t = build_topology(spec);
        const auto plans = make_batch_plan(t, 6, 1);
        for (const auto& p : plans) CHECK(p.batch_size == doctest::Approx(60.0));
    }
    SUBCASE("zero batches rejected") {
        const Topology t = build_topology(spec);
        CHECK_THROWS(make_batch_plan(t, 6, 0));
    }
}

TEST_CASE("batch plan conserves frames") {
    SeqRng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        TopologySpec spec;
        spec.terminals = static_cast<int>(rng.integer(1, 100));
        spec.levels = {{static_cast<int>(rng.integer(1, 9)), {0.01}}};
        const int alpha = static_cast<int>(rng.integer(1, 8));
        const int b = static_cast<int>(rng.integer(1, 6));
        const Topology t = build_topology(spec);

        const auto plans = make_batch_plan(t, alpha, b);
        double k_total = 0.0;
        long long exact_total = 0;
        for (const auto& p : plans) {
            k_total += p.batch_size * b;
            const auto counts = split_batch_counts(p.terminal_count * alpha, b);
            exact_total += std::accumulate(counts.begin(), counts.end(), 0LL);
        }
        CHECK(k_total == doctest::Approx(static_cast<double>(spec.terminals) * alpha));
        CHECK(exact_total == static_cast<long long>(spec.terminals) * alpha);
    }
}

TEST_CASE("largest-remainder batch counts") {
    CHECK(split_batch_counts(10, 3) == std::vector<int>{4, 3, 3});
    CHECK(split_batch_counts(9, 3) == std::vector<int>{3, 3, 3});
    CHECK(split_batch_counts(0, 4) == std::vector<int>{0, 0, 0, 0});
    CHECK_THROWS(split_batch_counts(5, 0));
}

TEST_CASE("task input extraction") {
    TaskRegistry registry;
    registry.add({"cnn", TaskKind::Cnn, 1});
    registry.add({"lstm", TaskKind::Lstm, 5});

    const TensorShape shape{2, 3, 3};
    std::vector<Frame> frames;
    for (auto& f : window_stream(mt_with_alpha(0, 10), 1, shape, 3)) {
        frames.push_back(std::move(f));
    }

    SUBCASE("cnn receives every frame exactly once") {
        const auto inputs = extract_task_inputs(frames, "cnn", registry);
        REQUIRE(inputs.frame_indices.size() == 10);
        std::set<std::size_t> unique(inputs.frame_indices.begin(), inputs.frame_indices.end());
        CHECK(unique.size() == 10);
    }
    SUBCASE("lstm chunks into non-overlapping windows") {
        const auto inputs = extract_task_inputs(frames, "lstm", registry);
        CHECK(inputs.sequences.size() == 2);
        CHECK(inputs.remainder == 0);
        for (const auto& seq : inputs.sequences) {
            CHECK(seq.size() == 5);
            for (const auto& x : seq) CHECK(x.size() == 2);  // one feature per depth slice
        }
    }
    SUBCASE("insufficient frames means zero sequences plus remainder") {
        const std::vector<Frame> three(frames.begin(), frames.begin() + 3);
        const auto inputs = extract_task_inputs(three, "lstm", registry);
        CHECK(inputs.sequences.empty());
        CHECK(inputs.remainder == 3);
    }
    SUBCASE("unknown task name") {
        CHECK_THROWS_AS((void)extract_task_inputs(frames, "svm", registry),
                        std::invalid_argument);
    }
}

TEST_CASE("frame features are depth-slice means") {
    Frame f;
    f.tensor = Tensor3(TensorShape{2, 2, 2}, {1.0, 2.0, 3.0, 4.0, 10.0, 10.0, 10.0, 10.0});
    const auto features = frame_features(f);
    REQUIRE(features.size() == 2);
    CHECK(features[0] == doctest::Approx(2.5));
    CHECK(features[1] == doctest::Approx(10.0));
}
