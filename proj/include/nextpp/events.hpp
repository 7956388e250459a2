#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace nextpp {

struct Event {
    double time = 0.0;
    std::size_t mark = 0;  // 0-based
    bool operator==(const Event&) const = default;
};

// Ordered events with strictly increasing, nonnegative times.
class EventSequence {
public:
    EventSequence() = default;
    explicit EventSequence(std::vector<Event> events);
    EventSequence(const std::vector<double>& times, const std::vector<std::size_t>& marks);

    std::size_t size() const noexcept { return events_.size(); }
    bool empty() const noexcept { return events_.empty(); }
    const Event& operator[](std::size_t i) const { return events_[i]; }
    const std::vector<Event>& events() const noexcept { return events_; }
    auto begin() const { return events_.begin(); }
    auto end() const { return events_.end(); }

    std::vector<double> times() const;
    std::vector<std::size_t> marks() const;
    double last_time() const { return events_.empty() ? 0.0 : events_.back().time; }

    // Appends an event; it must come strictly after the current last one.
    void push_back(Event e);
    EventSequence prefix(std::size_t n) const;

    bool operator==(const EventSequence&) const = default;

private:
    std::vector<Event> events_;
};

// Δt_1 = t_1, Δt_i = t_i − t_{i−1}.
std::vector<double> inter_event_intervals(const EventSequence& seq);

// Throws ValidationError naming the first violated invariant.
void validate_sequence(const EventSequence& seq, std::size_t mark_count);

enum class Split { train, dev, test, unspecified };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Dataset {
    std::size_t mark_count = 0;
    std::vector<EventSequence> sequences;
    Split split = Split::unspecified;

    std::size_t event_count() const;
    bool operator==(const Dataset&) const = default;
};

struct DatasetStats {
    std::size_t mark_count = 0;
    std::size_t sequence_count = 0;
    std::size_t token_count = 0;
    std::size_t min_length = 0;
    std::size_t max_length = 0;
    double mean_length = 0.0;
    std::vector<std::size_t> mark_counts;  // tokens per mark
    double total_duration = 0.0;           // Σ (t_L − t_1)
};

DatasetStats stats(const Dataset& data);

// JSONL: first line {"mark_count": M[, "split": "train"]}, then one
// {"times": [...], "marks": [...]} object per line.
Dataset load_jsonl(const std::filesystem::path& path);
Dataset parse_jsonl(const std::string& text);
void save_jsonl(const Dataset& data, const std::filesystem::path& path);
std::string to_jsonl(const Dataset& data);

// Per-split summary table: marks, sequences, tokens, length range and mean.
std::string format_stats(const DatasetStats& s, const std::string& label);

}  // namespace nextpp
