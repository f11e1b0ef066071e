#pragma once
// Binary states of the partially ordered space {-1,+1}^n and the lifted
// state (x, direction). The order is induced by the number of +1 entries:
// flipping a -1 moves up, flipping a +1 moves down.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace lifted {

enum class Direction : std::int8_t { down = -1, up = +1 };

constexpr Direction operator-(Direction d) {
  return d == Direction::up ? Direction::down : Direction::up;
}
constexpr int value(Direction d) { return static_cast<int>(d); }

class BinaryState {
 public:
  BinaryState() = default;
  // All entries set to `fill` (must be -1 or +1).
  explicit BinaryState(std::size_t n, std::int8_t fill = -1);
  static BinaryState from_spins(std::vector<std::int8_t> spins);
  // Bit i of `mask` set <=> entry i is +1. Requires n <= 63.
  static BinaryState from_index(std::uint64_t mask, std::size_t n);

  std::size_t size() const { return spins_.size(); }
  std::int8_t operator[](std::size_t i) const { return spins_[i]; }
  std::span<const std::int8_t> spins() const { return spins_; }

  std::size_t n_plus() const { return n_plus_; }
  std::size_t n_minus() const { return spins_.size() - n_plus_; }

  // In-place negation of entry i; throws std::out_of_range.
  void flip(std::size_t i);

  std::uint64_t to_index() const;
  std::string to_string() const;

  friend bool operator==(const BinaryState& a, const BinaryState& b) {
    return a.spins_ == b.spins_;
  }

 private:
  std::vector<std::int8_t> spins_;
  std::size_t n_plus_ = 0;
};

struct Counts {
  std::size_t n_minus;
  std::size_t n_plus;
};

Counts counts(const BinaryState& x);

BinaryState flip(BinaryState x, std::size_t i);

// True iff flipping i moves x in direction d (x_i == -d).
inline bool moves_in(const BinaryState& x, std::size_t i, Direction d) {
  return x[i] == -value(d);
}

// Indices i with x_i = -d, ascending. Its size is n_{-d}(x).
std::vector<std::size_t> directed_neighborhood(const BinaryState& x, Direction d);

// Size of the directed neighborhood without materializing it.
inline std::size_t directed_size(const BinaryState& x, Direction d) {
  return d == Direction::up ? x.n_minus() : x.n_plus();
}

struct LiftedState {
  BinaryState state;
  Direction direction = Direction::up;

  friend bool operator==(const LiftedState&, const LiftedState&) = default;
};

}  // namespace lifted
