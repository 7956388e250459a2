#include <gtest/gtest.h>

#include <filesystem>
#include <numeric>

#include "nextpp/baselines.hpp"
#include "nextpp/errors.hpp"
#include "nextpp/events.hpp"

using namespace nextpp;

namespace {

EventSequence seq_of_length(std::size_t n, double start = 0.5) {
    std::vector<Event> ev;
    for (std::size_t i = 0; i < n; ++i) ev.push_back({start + static_cast<double>(i), i % 2});
    return EventSequence(std::move(ev));
}

}  // namespace

TEST(Jsonl, SingleRecord) {
    Dataset d = parse_jsonl("{\"mark_count\": 1}\n{\"marks\":[0],\"times\":[1.5]}\n");
    ASSERT_EQ(d.sequences.size(), 1u);
    EXPECT_EQ(d.mark_count, 1u);
    EXPECT_EQ(d.sequences[0].size(), 1u);
    EXPECT_EQ(d.sequences[0][0].time, 1.5);
    EXPECT_EQ(d.sequences[0][0].mark, 0u);
}

TEST(Jsonl, RepeatedTimeIsValidationError) {
    EXPECT_THROW(parse_jsonl("{\"mark_count\": 1}\n{\"marks\":[0,0],\"times\":[1.0,1.0]}\n"),
                 ValidationError);
}

TEST(Jsonl, ErrorsNameTheLine) {
    try {
        parse_jsonl("{\"mark_count\": 2}\n{\"marks\":[0],\"times\":[1]}\n{\"marks\":[5],\"times\":[1]}\n");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
    try {
        parse_jsonl("{\"mark_count\": 2}\n{\"marks\":[0],\"times\":[1]\n");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos) << e.what();
    }
}

TEST(Jsonl, HeaderRequired) {
    EXPECT_THROW(parse_jsonl(""), ParseError);
    EXPECT_THROW(parse_jsonl("{\"marks\":[0],\"times\":[1.5]}\n"), ParseError);
    EXPECT_THROW(parse_jsonl("{\"mark_count\": 1}\n{\"marks\":[0,0],\"times\":[1.5]}\n"), ParseError);
}

TEST(Jsonl, NegativeTimeRejected) {
    EXPECT_THROW(parse_jsonl("{\"mark_count\": 1}\n{\"marks\":[0],\"times\":[-1]}\n"), ValidationError);
}

TEST(Jsonl, RoundTripSyntheticDataset) {
    Rng rng(5);
    Dataset d = generate_hawkes(HawkesParams::benchmark(), 20.0, 100, rng);
    d.split = Split::dev;
    ASSERT_EQ(d.sequences.size(), 100u);
    EXPECT_EQ(parse_jsonl(to_jsonl(d)), d);

    const auto path = std::filesystem::temp_directory_path() / "nextpp_roundtrip.jsonl";
    save_jsonl(d, path);
    EXPECT_EQ(load_jsonl(path), d);
    std::filesystem::remove(path);
}

TEST(Jsonl, MissingFileIsIoError) {
    EXPECT_THROW(load_jsonl("/nonexistent/dir/x.jsonl"), IoError);
}

TEST(Stats, TaxiLikeLengths) {
    Dataset d;
    d.mark_count = 10;
    for (std::size_t i = 0; i < 2000; ++i) d.sequences.push_back(seq_of_length(36 + i % 3));
    const DatasetStats s = stats(d);
    EXPECT_EQ(s.min_length, 36u);
    EXPECT_EQ(s.max_length, 38u);
    EXPECT_NEAR(s.mean_length, 37.0, 1e-3);
    const std::string table = format_stats(s, "train");
    EXPECT_NE(table.find("36"), std::string::npos);
    EXPECT_NE(table.find("37"), std::string::npos);
    EXPECT_NE(table.find("38"), std::string::npos);
}

TEST(Stats, SingleSequence) {
    Dataset d;
    d.mark_count = 2;
    d.sequences.push_back(seq_of_length(5));
    const DatasetStats s = stats(d);
    EXPECT_EQ(s.min_length, 5u);
    EXPECT_EQ(s.max_length, 5u);
    EXPECT_EQ(s.mean_length, 5.0);
    EXPECT_EQ(s.token_count, 5u);
    EXPECT_EQ(s.mark_counts, (std::vector<std::size_t>{3, 2}));
    EXPECT_DOUBLE_EQ(s.total_duration, 4.0);
}

TEST(Stats, MeanOfTwo) {
    Dataset d;
    d.mark_count = 2;
    d.sequences.push_back(seq_of_length(10));
    d.sequences.push_back(seq_of_length(20));
    EXPECT_EQ(stats(d).mean_length, 15.0);
}

TEST(Stats, EmptyDatasetRejected) {
    Dataset d;
    d.mark_count = 1;
    EXPECT_THROW(stats(d), ContractError);
}

TEST(Intervals, Examples) {
    EXPECT_EQ(inter_event_intervals(EventSequence({2, 5, 6}, {0, 0, 0})), (std::vector<double>{2, 3, 1}));
    EXPECT_EQ(inter_event_intervals(EventSequence({7}, {0})), (std::vector<double>{7}));
}

TEST(Intervals, CumulativeSumRecoversTimes) {
    Rng rng(2);
    Dataset d = generate_poisson(PoissonParams{{1.0, 2.0}}, 30.0, 5, rng);
    for (const auto& s : d.sequences) {
        auto gaps = inter_event_intervals(s);
        std::vector<double> t(gaps.size());
        std::partial_sum(gaps.begin(), gaps.end(), t.begin());
        const auto times = s.times();
        for (std::size_t i = 0; i < t.size(); ++i) EXPECT_NEAR(t[i], times[i], 1e-12);
    }
}

TEST(Sequence, PushBackRequiresIncrease) {
    EventSequence s({1.0}, {0});
    EXPECT_THROW(s.push_back({1.0, 0}), ValidationError);
    s.push_back({1.5, 0});
    EXPECT_EQ(s.size(), 2u);
    EXPECT_EQ(s.prefix(1).size(), 1u);
}

TEST(Split, Names) {
    for (Split s : {Split::train, Split::dev, Split::test}) EXPECT_EQ(split_from_string(to_string(s)), s);
}
