#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mqlab/errors.hpp"

namespace mqlab {

/// Per-round outcome of one customer-product interaction.
/// S and F are consumption events (satisfied / dissatisfied); N is abstention.
enum class Event : std::uint8_t { S = 0, F = 1, N = 2 };

inline char to_char(Event e) {
    switch (e) {
        case Event::S: return 'S';
        case Event::F: return 'F';
        default: return 'N';
    }
}

inline Event event_from_char(char c) {
    switch (c) {
        case 'S': return Event::S;
        case 'F': return Event::F;
        case 'N': return Event::N;
        default: throw std::invalid_argument(std::string("invalid event character '") + c + "'");
    }
}

/// An ordered record of a customer's rounds with one product.
///
/// Immutable value type. Rounds are 1-based in the round-indexed accessors to
/// match the usual convention for discrete time.
class History {
public:
    History() = default;
    explicit History(std::vector<Event> events) : events_(std::move(events)) {}

    /// Parses strings like "FNSSN". The empty string is the empty history.
    static History parse(std::string_view text) {
        std::vector<Event> ev;
        ev.reserve(text.size());
        for (char c : text) ev.push_back(event_from_char(c));
        return History(std::move(ev));
    }

    std::size_t depth() const { return events_.size(); }
    bool empty() const { return events_.empty(); }

    /// Event of round k, 1-based.
    Event at_round(std::size_t k) const { return events_.at(k - 1); }

    const std::vector<Event>& events() const { return events_; }

    /// The first k rounds as a new history.
    History prefix(std::size_t k) const {
        if (k > depth()) throw std::out_of_range("history prefix longer than depth");
        return History(std::vector<Event>(events_.begin(), events_.begin() + static_cast<std::ptrdiff_t>(k)));
    }

    History extended(Event e) const {
        std::vector<Event> ev = events_;
        ev.push_back(e);
        return History(std::move(ev));
    }

    std::size_t count(Event e) const {
        return static_cast<std::size_t>(std::count(events_.begin(), events_.end(), e));
    }

    std::string str() const {
        std::string out;
        out.reserve(events_.size());
        for (Event e : events_) out.push_back(to_char(e));
        return out;
    }

    friend bool operator==(const History&, const History&) = default;
    friend auto operator<=>(const History&, const History&) = default;

private:
    std::vector<Event> events_;
};

/// Number of consumption (non-N) events.
inline std::size_t consumption(const History& h) {
    return h.depth() - h.count(Event::N);
}

/// Consumption count restricted to the first k rounds.
inline std::size_t consumption_prefix(const History& h, std::size_t k) {
    std::size_t c = 0;
    for (std::size_t r = 1; r <= k; ++r)
        if (h.at_round(r) != Event::N) ++c;
    return c;
}

/// The history with all N-rounds removed, order preserved.
inline History digest(const History& h) {
    std::vector<Event> ev;
    ev.reserve(consumption(h));
    for (Event e : h.events())
        if (e != Event::N) ev.push_back(e);
    return History(std::move(ev));
}

/// Whether two histories are candidates for the superiority relation:
/// equal depth and equal consumption.
inline bool comparable(const History& h1, const History& h2) {
    return h1.depth() == h2.depth() && consumption(h1) == consumption(h2);
}

/// Superiority on equal-length digests: no position where the left shows F
/// while the right shows S.
inline bool digest_superior(const History& d1, const History& d2) {
    if (d1.depth() != d2.depth()) return false;
    for (std::size_t p = 0; p < d1.depth(); ++p)
        if (d1.events()[p] == Event::F && d2.events()[p] == Event::S) return false;
    return true;
}

/// h1 is superior to h2: comparable, and the digests never show F in h1
/// where h2 shows S. False for incomparable pairs.
inline bool is_superior(const History& h1, const History& h2) {
    return comparable(h1, h2) && digest_superior(digest(h1), digest(h2));
}

/// Largest depth enumerable as a full set of 3^t histories.
inline constexpr std::size_t kMaxEnumerationDepth = 12;

/// All histories of the given depth, in a fixed order (base-3 with S<F<N).
inline std::vector<History> enumerate_histories(std::size_t t, std::size_t cap = kMaxEnumerationDepth) {
    if (t > cap)
        throw CapExceededError("history enumeration depth " + std::to_string(t) +
                               " exceeds cap " + std::to_string(cap));
    std::vector<History> out;
    std::size_t total = 1;
    for (std::size_t i = 0; i < t; ++i) total *= 3;
    out.reserve(total);
    std::vector<Event> cur(t, Event::S);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t v = code;
        for (std::size_t pos = t; pos-- > 0;) {
            cur[pos] = static_cast<Event>(v % 3);
            v /= 3;
        }
        out.emplace_back(cur);
    }
    return out;
}

/// Unit counts of consumed product, one entry per product.
using ShareVector = std::vector<long long>;

/// An n-customer x m-product grid of equal-depth histories.
class HistoryEnsemble {
public:
    HistoryEnsemble() = default;

    HistoryEnsemble(std::size_t products, std::size_t customers, std::size_t depth)
        : products_(products), customers_(customers),
          entries_(products * customers, History(std::vector<Event>(depth, Event::N))) {}

    HistoryEnsemble(std::size_t products, std::size_t customers, std::vector<History> entries)
        : products_(products), customers_(customers), entries_(std::move(entries)) {
        if (entries_.size() != products_ * customers_)
            throw std::invalid_argument("ensemble entry count does not match dimensions");
        for (const History& h : entries_)
            if (h.depth() != depth())
                throw std::invalid_argument("ensemble entries must share a common depth");
    }

    std::size_t products() const { return products_; }
    std::size_t customers() const { return customers_; }
    std::size_t depth() const { return entries_.empty() ? 0 : entries_.front().depth(); }

    /// Entry for product i, customer j (0-based).
    const History& entry(std::size_t product, std::size_t customer) const {
        return entries_.at(product * customers_ + customer);
    }
    History& entry(std::size_t product, std::size_t customer) {
        return entries_.at(product * customers_ + customer);
    }

    const std::vector<History>& entries() const { return entries_; }

    /// Compact text form: customers joined by '/', products by '|',
    /// empty histories written as '.'.
    std::string str() const {
        std::string out;
        for (std::size_t j = 0; j < customers_; ++j) {
            if (j) out.push_back('/');
            for (std::size_t i = 0; i < products_; ++i) {
                if (i) out.push_back('|');
                std::string cell = entry(i, j).str();
                out += cell.empty() ? "." : cell;
            }
        }
        return out;
    }

    friend bool operator==(const HistoryEnsemble&, const HistoryEnsemble&) = default;
    friend auto operator<=>(const HistoryEnsemble&, const HistoryEnsemble&) = default;

private:
    std::size_t products_ = 0;
    std::size_t customers_ = 0;
    std::vector<History> entries_;
};

/// Market share after round k: A_i plus all units of product i consumed in
/// rounds 1..k. k = 0 returns A unchanged.
inline ShareVector market_share(const HistoryEnsemble& e, const ShareVector& initial, std::size_t k) {
    if (initial.size() != e.products())
        throw std::invalid_argument("initial share vector length does not match product count");
    if (k > e.depth()) throw std::out_of_range("round index beyond ensemble depth");
    ShareVector shares = initial;
    for (std::size_t i = 0; i < e.products(); ++i)
        for (std::size_t j = 0; j < e.customers(); ++j)
            shares[i] += static_cast<long long>(consumption_prefix(e.entry(i, j), k));
    return shares;
}

}  // namespace mqlab
