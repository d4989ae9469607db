#pragma once

#include <cstdint>
#include <algorithm>
#include <utility>
#include <vector>

#include "wsnsync/timebase.hpp"

namespace wsnsync {

/// Min-queue ordered by (time, insertion sequence). Events scheduled for the
/// same instant dispatch in the order they were pushed.
template <class Payload>
class EventQueue {
public:
    struct Entry {
        TimeStamp time;
        std::uint64_t sequence;
        Payload payload;
    };

    std::uint64_t push(TimeStamp time, Payload payload) {
        const std::uint64_t seq = next_sequence_++;
        heap_.push_back(Entry{time, seq, std::move(payload)});
        std::push_heap(heap_.begin(), heap_.end(), Later{});
        return seq;
    }

    [[nodiscard]] bool empty() const { return heap_.empty(); }
    [[nodiscard]] std::size_t size() const { return heap_.size(); }

    Entry pop() {
        std::pop_heap(heap_.begin(), heap_.end(), Later{});
        Entry top = std::move(heap_.back());
        heap_.pop_back();
        return top;
    }

private:
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.time != b.time)
                return a.time > b.time;
            return a.sequence > b.sequence;
        }
    };

    std::vector<Entry> heap_;
    std::uint64_t next_sequence_ = 0;
};

} // namespace wsnsync
