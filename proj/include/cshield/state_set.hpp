#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace cshield {

using StateId = std::uint32_t;
using ActionId = std::uint32_t;

// Growable bit set over StateIds. Trailing zero words are always trimmed, so
// two sets compare equal iff they contain the same states regardless of the
// universe they were built over.
class StateSet
{
public:
    StateSet() = default;
    StateSet(std::initializer_list<StateId> states);

    static StateSet singleton(StateId s);
    static StateSet range(StateId first, StateId last_exclusive);

    void insert(StateId s);
    void erase(StateId s);
    [[nodiscard]] bool contains(StateId s) const;
    [[nodiscard]] bool empty() const { return words_.empty(); }
    [[nodiscard]] std::size_t count() const;

    // Ascending list of members.
    [[nodiscard]] std::vector<StateId> members() const;

    [[nodiscard]] bool is_subset_of(const StateSet& other) const;
    StateSet& operator|=(const StateSet& other);
    StateSet& operator&=(const StateSet& other);
    friend StateSet operator|(StateSet a, const StateSet& b) { return a |= b; }
    friend StateSet operator&(StateSet a, const StateSet& b) { return a &= b; }

    // Hexadecimal, most significant digit first, bit i <-> state i. "0" for ∅.
    [[nodiscard]] std::string to_hex() const;
    static StateSet from_hex(std::string_view hex);

    // Numeric order of the underlying bit vector.
    friend std::strong_ordering operator<=>(const StateSet& a, const StateSet& b);
    friend bool operator==(const StateSet& a, const StateSet& b) = default;

    [[nodiscard]] std::size_t hash() const;

private:
    void trim();

    std::vector<std::uint64_t> words_;
};

struct StateSetHash
{
    std::size_t operator()(const StateSet& s) const { return s.hash(); }
};

} // namespace cshield
