#include "nextpp/events.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nextpp/errors.hpp"

namespace nextpp {

using json = nlohmann::json;

EventSequence::EventSequence(std::vector<Event> events) : events_(std::move(events)) {}

EventSequence::EventSequence(const std::vector<double>& times, const std::vector<std::size_t>& marks) {
    if (times.size() != marks.size()) throw ContractError("times and marks differ in length");
    events_.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) events_.push_back({times[i], marks[i]});
}

std::vector<double> EventSequence::times() const {
    std::vector<double> t;
    t.reserve(events_.size());
    for (const auto& e : events_) t.push_back(e.time);
    return t;
}

std::vector<std::size_t> EventSequence::marks() const {
    std::vector<std::size_t> m;
    m.reserve(events_.size());
    for (const auto& e : events_) m.push_back(e.mark);
    return m;
}

void EventSequence::push_back(Event e) {
    if (!events_.empty() && !(e.time > events_.back().time)) {
        throw ValidationError("appended event time does not increase");
    }
    events_.push_back(e);
}

EventSequence EventSequence::prefix(std::size_t n) const {
    n = std::min(n, events_.size());
    return EventSequence(std::vector<Event>(events_.begin(), events_.begin() + static_cast<long>(n)));
}

std::vector<double> inter_event_intervals(const EventSequence& seq) {
    std::vector<double> d;
    d.reserve(seq.size());
    double prev = 0.0;
    for (const auto& e : seq) {
        d.push_back(e.time - prev);
        prev = e.time;
    }
    return d;
}

void validate_sequence(const EventSequence& seq, std::size_t mark_count) {
    if (seq.empty()) throw ValidationError("empty sequence");
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const Event& e = seq[i];
        if (!std::isfinite(e.time) || e.time < 0.0) {
            throw ValidationError("event " + std::to_string(i) + " has invalid time");
        }
        if (e.mark >= mark_count) {
            throw ValidationError("event " + std::to_string(i) + " mark " + std::to_string(e.mark) +
                                  " >= mark_count " + std::to_string(mark_count));
        }
        if (i > 0 && !(e.time > seq[i - 1].time)) {
            throw ValidationError("event " + std::to_string(i) + " time does not strictly increase");
        }
    }
}

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::dev: return "dev";
        case Split::test: return "test";
        case Split::unspecified: return "";
    }
    return "";
}

Split split_from_string(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "dev") return Split::dev;
    if (s == "test") return Split::test;
    if (s.empty()) return Split::unspecified;
    throw ParseError("unknown split '" + s + "'");
}

std::size_t Dataset::event_count() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
}

DatasetStats stats(const Dataset& data) {
    if (data.sequences.empty()) throw ContractError("stats of an empty dataset");
    DatasetStats s;
    s.mark_count = data.mark_count;
    s.sequence_count = data.sequences.size();
    s.min_length = data.sequences.front().size();
    s.mark_counts.assign(data.mark_count, 0);
    for (const auto& seq : data.sequences) {
        s.token_count += seq.size();
        s.min_length = std::min(s.min_length, seq.size());
        s.max_length = std::max(s.max_length, seq.size());
        for (const auto& e : seq) {
            if (e.mark < s.mark_counts.size()) ++s.mark_counts[e.mark];
        }
        if (!seq.empty()) s.total_duration += seq.last_time() - seq[0].time;
    }
    s.mean_length = static_cast<double>(s.token_count) / static_cast<double>(s.sequence_count);
    return s;
}

namespace {

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
    throw ParseError("line " + std::to_string(line) + ": " + what);
}

}  // namespace

Dataset parse_jsonl(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    Dataset data;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            fail_line(lineno, std::string("malformed JSON: ") + e.what());
        }
        if (!j.is_object()) fail_line(lineno, "expected a JSON object");
        if (!have_header) {
            if (!j.contains("mark_count") || !j["mark_count"].is_number_integer() ||
                j["mark_count"].get<long long>() < 1) {
                fail_line(lineno, "first line must be a header {\"mark_count\": M} with M >= 1");
            }
            data.mark_count = j["mark_count"].get<std::size_t>();
            if (j.contains("split")) {
                if (!j["split"].is_string()) fail_line(lineno, "split must be a string");
                data.split = split_from_string(j["split"].get<std::string>());
            }
            have_header = true;
            continue;
        }
        if (!j.contains("times") || !j.contains("marks") || !j["times"].is_array() ||
            !j["marks"].is_array()) {
            fail_line(lineno, "record needs \"times\" and \"marks\" arrays");
        }
        const auto& jt = j["times"];
        const auto& jm = j["marks"];
        if (jt.size() != jm.size()) fail_line(lineno, "times and marks differ in length");
        std::vector<Event> events;
        events.reserve(jt.size());
        for (std::size_t i = 0; i < jt.size(); ++i) {
            if (!jt[i].is_number()) fail_line(lineno, "non-numeric time");
            if (!jm[i].is_number_integer() || jm[i].get<long long>() < 0) {
                fail_line(lineno, "marks must be nonnegative integers");
            }
            events.push_back({jt[i].get<double>(), jm[i].get<std::size_t>()});
        }
        EventSequence seq(std::move(events));
        try {
            validate_sequence(seq, data.mark_count);
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
        data.sequences.push_back(std::move(seq));
    }
    if (!have_header) throw ParseError("missing header line");
    return data;
}

Dataset load_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_jsonl(buf.str());
}

std::string to_jsonl(const Dataset& data) {
    std::string out;
    json header = {{"mark_count", data.mark_count}};
    if (data.split != Split::unspecified) header["split"] = to_string(data.split);
    out += header.dump();
    out += '\n';
    for (const auto& seq : data.sequences) {
        json rec = {{"times", seq.times()}, {"marks", seq.marks()}};
        out += rec.dump();
        out += '\n';
    }
    return out;
}

void save_jsonl(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << to_jsonl(data);
    if (!out) throw IoError("write failed for " + path.string());
}

std::string format_stats(const DatasetStats& s, const std::string& label) {
    std::ostringstream os;
    os << std::left << std::setw(12) << "split" << std::right << std::setw(6) << "M" << std::setw(10)
       << "seqs" << std::setw(12) << "tokens" << std::setw(8) << "min" << std::setw(8) << "mean"
       << std::setw(8) << "max" << '\n';
    os << std::left << std::setw(12) << (label.empty() ? "-" : label) << std::right << std::setw(6)
       << s.mark_count << std::setw(10) << s.sequence_count << std::setw(12) << s.token_count
       << std::setw(8) << s.min_length << std::setw(8) << std::llround(s.mean_length) << std::setw(8)
       << s.max_length << '\n';
    return os.str();
}

}  // namespace nextpp
