#include "lifted/state.hpp"

#include <stdexcept>

namespace lifted {

BinaryState::BinaryState(std::size_t n, std::int8_t fill) : spins_(n, fill) {
  if (n == 0) throw std::invalid_argument("BinaryState: dimension must be positive");
  if (fill != -1 && fill != 1) throw std::invalid_argument("BinaryState: entries must be -1 or +1");
  n_plus_ = fill == 1 ? n : 0;
}

BinaryState BinaryState::from_spins(std::vector<std::int8_t> spins) {
  if (spins.empty()) throw std::invalid_argument("BinaryState: dimension must be positive");
  BinaryState x;
  for (auto s : spins) {
    if (s != -1 && s != 1) throw std::invalid_argument("BinaryState: entries must be -1 or +1");
    x.n_plus_ += s == 1;
  }
  x.spins_ = std::move(spins);
  return x;
}

BinaryState BinaryState::from_index(std::uint64_t mask, std::size_t n) {
  if (n == 0 || n > 63) throw std::invalid_argument("BinaryState::from_index: need 1 <= n <= 63");
  BinaryState x(n, -1);
  for (std::size_t i = 0; i < n; ++i)
    if ((mask >> i) & 1U) {
      x.spins_[i] = 1;
      ++x.n_plus_;
    }
  return x;
}

void BinaryState::flip(std::size_t i) {
  if (i >= spins_.size()) throw std::out_of_range("BinaryState::flip: index out of range");
  spins_[i] = static_cast<std::int8_t>(-spins_[i]);
  if (spins_[i] == 1)
    ++n_plus_;
  else
    --n_plus_;
}

std::uint64_t BinaryState::to_index() const {
  if (spins_.size() > 63) throw std::length_error("BinaryState::to_index: n > 63");
  std::uint64_t mask = 0;
  for (std::size_t i = 0; i < spins_.size(); ++i)
    if (spins_[i] == 1) mask |= std::uint64_t{1} << i;
  return mask;
}

std::string BinaryState::to_string() const {
  std::string s;
  s.reserve(spins_.size());
  for (auto v : spins_) s.push_back(v == 1 ? '+' : '-');
  return s;
}

Counts counts(const BinaryState& x) { return {x.n_minus(), x.n_plus()}; }

BinaryState flip(BinaryState x, std::size_t i) {
  x.flip(i);
  return x;
}

std::vector<std::size_t> directed_neighborhood(const BinaryState& x, Direction d) {
  std::vector<std::size_t> out;
  out.reserve(directed_size(x, d));
  const int target = -value(d);
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] == target) out.push_back(i);
  return out;
}

}  // namespace lifted
