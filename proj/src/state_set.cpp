#include "cshield/state_set.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace cshield {

namespace {

constexpr std::size_t word_bits = 64;

int hex_value(char c)
{
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

StateSet::StateSet(std::initializer_list<StateId> states)
{
    for (StateId s : states) insert(s);
}

StateSet StateSet::singleton(StateId s)
{
    StateSet out;
    out.insert(s);
    return out;
}

StateSet StateSet::range(StateId first, StateId last_exclusive)
{
    StateSet out;
    for (StateId s = first; s < last_exclusive; ++s) out.insert(s);
    return out;
}

void StateSet::insert(StateId s)
{
    const std::size_t w = s / word_bits;
    if (w >= words_.size()) words_.resize(w + 1, 0);
    words_[w] |= std::uint64_t{1} << (s % word_bits);
}

void StateSet::erase(StateId s)
{
    const std::size_t w = s / word_bits;
    if (w >= words_.size()) return;
    words_[w] &= ~(std::uint64_t{1} << (s % word_bits));
    trim();
}

bool StateSet::contains(StateId s) const
{
    const std::size_t w = s / word_bits;
    return w < words_.size() && ((words_[w] >> (s % word_bits)) & 1U) != 0;
}

std::size_t StateSet::count() const
{
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
}

std::vector<StateId> StateSet::members() const
{
    std::vector<StateId> out;
    out.reserve(count());
    for (std::size_t w = 0; w < words_.size(); ++w) {
        std::uint64_t bits = words_[w];
        while (bits != 0) {
            const int b = std::countr_zero(bits);
            out.push_back(static_cast<StateId>(w * word_bits + static_cast<std::size_t>(b)));
            bits &= bits - 1;
        }
    }
    return out;
}

bool StateSet::is_subset_of(const StateSet& other) const
{
    if (words_.size() > other.words_.size()) return false;
    for (std::size_t w = 0; w < words_.size(); ++w) {
        if ((words_[w] & ~other.words_[w]) != 0) return false;
    }
    return true;
}

StateSet& StateSet::operator|=(const StateSet& other)
{
    if (other.words_.size() > words_.size()) words_.resize(other.words_.size(), 0);
    for (std::size_t w = 0; w < other.words_.size(); ++w) words_[w] |= other.words_[w];
    return *this;
}

StateSet& StateSet::operator&=(const StateSet& other)
{
    if (words_.size() > other.words_.size()) words_.resize(other.words_.size());
    for (std::size_t w = 0; w < words_.size(); ++w) words_[w] &= other.words_[w];
    trim();
    return *this;
}

std::string StateSet::to_hex() const
{
    if (words_.empty()) return "0";
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    bool leading = true;
    for (auto it = words_.rbegin(); it != words_.rend(); ++it) {
        for (int nibble = 15; nibble >= 0; --nibble) {
            const auto v = static_cast<unsigned>((*it >> (4 * nibble)) & 0xFU);
            if (leading && v == 0) continue;
            leading = false;
            out.push_back(digits[v]);
        }
    }
    return out;
}

StateSet StateSet::from_hex(std::string_view hex)
{
    if (hex.empty()) throw std::invalid_argument("empty hexadecimal state set");
    StateSet out;
    std::size_t bit = 0;
    for (auto it = hex.rbegin(); it != hex.rend(); ++it, bit += 4) {
        const int v = hex_value(*it);
        if (v < 0) throw std::invalid_argument("invalid hexadecimal state set '" + std::string(hex) + "'");
        for (int b = 0; b < 4; ++b) {
            if ((v >> b) & 1) out.insert(static_cast<StateId>(bit + static_cast<std::size_t>(b)));
        }
    }
    return out;
}

std::strong_ordering operator<=>(const StateSet& a, const StateSet& b)
{
    if (a.words_.size() != b.words_.size()) return a.words_.size() <=> b.words_.size();
    for (std::size_t i = a.words_.size(); i-- > 0;) {
        if (a.words_[i] != b.words_[i]) return a.words_[i] <=> b.words_[i];
    }
    return std::strong_ordering::equal;
}

std::size_t StateSet::hash() const
{
    std::size_t h = 0xcbf29ce484222325ULL;
    for (auto w : words_) {
        h ^= std::hash<std::uint64_t>{}(w) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

void StateSet::trim()
{
    while (!words_.empty() && words_.back() == 0) words_.pop_back();
}

} // namespace cshield
