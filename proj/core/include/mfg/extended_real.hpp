#pragma once

#include <cassert>
#include <ostream>

namespace mfg {

/// A real number or +infinity. Arithmetic is limited to what convex
/// functionals need: addition and scaling by nonnegative reals.
class ExtendedReal {
 public:
  constexpr ExtendedReal() = default;
  constexpr ExtendedReal(double v) : value_(v) {}  // NOLINT: implicit from finite reals

  static constexpr ExtendedReal infinity() {
    ExtendedReal r;
    r.infinite_ = true;
    return r;
  }

  constexpr bool is_infinite() const { return infinite_; }
  constexpr bool is_finite() const { return !infinite_; }

  /// The finite value. Must not be called on +infinity.
  constexpr double value() const {
    assert(!infinite_);
    return value_;
  }

  friend constexpr ExtendedReal operator+(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return infinity();
    return a.value_ + b.value_;
  }
  ExtendedReal& operator+=(ExtendedReal o) { return *this = *this + o; }

  friend constexpr ExtendedReal operator*(double s, ExtendedReal a) {
    assert(s >= 0.0);
    if (a.infinite_) return s == 0.0 ? ExtendedReal(0.0) : infinity();
    return s * a.value_;
  }

  friend constexpr bool operator==(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_ || b.infinite_) return a.infinite_ == b.infinite_;
    return a.value_ == b.value_;
  }
  friend constexpr bool operator<(ExtendedReal a, ExtendedReal b) {
    if (a.infinite_) return false;
    if (b.infinite_) return true;
    return a.value_ < b.value_;
  }
  friend constexpr bool operator<=(ExtendedReal a, ExtendedReal b) { return !(b < a); }

  friend std::ostream& operator<<(std::ostream& os, ExtendedReal a) {
    if (a.infinite_) return os << "+inf";
    return os << a.value_;
  }

 private:
  double value_ = 0.0;
  bool infinite_ = false;
};

}  // namespace mfg
