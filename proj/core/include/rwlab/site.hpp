#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "rwlab/rng.hpp"

namespace rwlab {

inline constexpr int kMaxDim = 8;

/// Lattice point of Z^d, d <= kMaxDim. Unused trailing coordinates stay zero,
/// so equality and ordering ignore the dimension.
struct Site {
  std::array<std::int32_t, kMaxDim> x{};

  std::int32_t& operator[](int i) { return x[static_cast<std::size_t>(i)]; }
  std::int32_t operator[](int i) const { return x[static_cast<std::size_t>(i)]; }

  friend bool operator==(const Site& a, const Site& b) noexcept {
    return std::memcmp(a.x.data(), b.x.data(), sizeof(a.x)) == 0;
  }
  friend auto operator<=>(const Site& a, const Site& b) noexcept { return a.x <=> b.x; }

  static Site origin() { return Site{}; }
  static Site axis(int i, std::int32_t v) {
    Site s;
    s[i] = v;
    return s;
  }
  static Site of(std::initializer_list<std::int32_t> coords) {
    Site s;
    std::copy(coords.begin(), coords.end(), s.x.begin());
    return s;
  }
};

inline std::int64_t norm2(const Site& s, int d) {
  std::int64_t acc = 0;
  for (int i = 0; i < d; ++i) acc += static_cast<std::int64_t>(s[i]) * s[i];
  return acc;
}

inline std::int64_t dist2(const Site& a, const Site& b, int d) {
  std::int64_t acc = 0;
  for (int i = 0; i < d; ++i) {
    const std::int64_t t = static_cast<std::int64_t>(a[i]) - b[i];
    acc += t * t;
  }
  return acc;
}

inline std::string to_string(const Site& s, int d) {
  std::string out = "(";
  for (int i = 0; i < d; ++i) {
    if (i) out += ',';
    out += std::to_string(s[i]);
  }
  return out + ")";
}

struct SiteHash {
  std::size_t operator()(const Site& s) const noexcept {
    std::uint64_t h = 0;
    for (auto c : s.x) h = mix64(h ^ static_cast<std::uint32_t>(c)) + kGolden;
    return static_cast<std::size_t>(h);
  }
};

/// Axis-aligned integer box with inclusive bounds lo[i]..hi[i] for i < d.
struct Box {
  int d = 0;
  Site lo;
  Site hi;

  bool contains(const Site& s) const noexcept {
    for (int i = 0; i < d; ++i)
      if (s[i] < lo[i] || s[i] > hi[i]) return false;
    return true;
  }
  bool empty() const noexcept {
    for (int i = 0; i < d; ++i)
      if (hi[i] < lo[i]) return true;
    return false;
  }
  std::uint64_t volume() const noexcept {
    if (empty()) return 0;
    std::uint64_t v = 1;
    for (int i = 0; i < d; ++i) v *= static_cast<std::uint64_t>(hi[i] - lo[i] + 1);
    return v;
  }
  /// Cube [-r, r]^d.
  static Box cube(int d, std::int32_t r) {
    Box b{d, {}, {}};
    for (int i = 0; i < d; ++i) {
      b.lo[i] = -r;
      b.hi[i] = r;
    }
    return b;
  }

  /// Calls fn(site) for every site in lexicographic order (first axis slowest).
  template <class Fn>
  void for_each(Fn&& fn) const {
    if (empty()) return;
    Site s = lo;
    for (;;) {
      fn(static_cast<const Site&>(s));
      int i = d - 1;
      while (i >= 0) {
        if (s[i] < hi[i]) {
          ++s[i];
          break;
        }
        s[i] = lo[i];
        --i;
      }
      if (i < 0) return;
    }
  }
};

/// Open-addressing site -> count table reused across walks. clear() is O(1)
/// amortised through generation stamps.
class SiteCounter {
 public:
  explicit SiteCounter(std::size_t capacity_pow2 = 1u << 12) { rebuild(capacity_pow2); }

  void clear() noexcept {
    ++generation_;
    size_ = 0;
    touched_.clear();
  }

  /// Increments the count of s and returns the new count.
  std::int64_t increment(const Site& s) {
    if ((size_ + 1) * 2 > slots_.size()) grow();
    std::size_t i = SiteHash{}(s) & mask_;
    for (;;) {
      Slot& slot = slots_[i];
      if (slot.gen != generation_) {
        slot.gen = generation_;
        slot.key = s;
        slot.count = 1;
        ++size_;
        touched_.push_back(static_cast<std::uint32_t>(i));
        return 1;
      }
      if (slot.key == s) return ++slot.count;
      i = (i + 1) & mask_;
    }
  }

  std::int64_t get(const Site& s) const noexcept {
    std::size_t i = SiteHash{}(s) & mask_;
    for (;;) {
      const Slot& slot = slots_[i];
      if (slot.gen != generation_) return 0;
      if (slot.key == s) return slot.count;
      i = (i + 1) & mask_;
    }
  }

  std::size_t size() const noexcept { return size_; }

  /// Visits (site, count) pairs in insertion order.
  template <class Fn>
  void for_each(Fn&& fn) const {
    for (auto i : touched_) fn(slots_[i].key, slots_[i].count);
  }

 private:
  struct Slot {
    Site key;
    std::int64_t count = 0;
    std::uint64_t gen = 0;
  };

  void rebuild(std::size_t cap) {
    slots_.assign(cap, Slot{});
    mask_ = cap - 1;
    generation_ = 1;
    size_ = 0;
    touched_.clear();
  }

  void grow() {
    std::vector<std::pair<Site, std::int64_t>> live;
    live.reserve(size_);
    for_each([&](const Site& s, std::int64_t c) { live.emplace_back(s, c); });
    rebuild(slots_.size() * 2);
    for (auto& [s, c] : live) {
      std::size_t i = SiteHash{}(s) & mask_;
      while (slots_[i].gen == generation_) i = (i + 1) & mask_;
      slots_[i] = Slot{s, c, generation_};
      ++size_;
      touched_.push_back(static_cast<std::uint32_t>(i));
    }
  }

  std::vector<Slot> slots_;
  std::vector<std::uint32_t> touched_;
  std::size_t mask_ = 0;
  std::size_t size_ = 0;
  std::uint64_t generation_ = 1;
};

}  // namespace rwlab
