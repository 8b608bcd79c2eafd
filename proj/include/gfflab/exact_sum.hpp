#pragma once

#include <cmath>
#include <vector>

namespace gfflab {

/// Exact sum of doubles as a nonoverlapping expansion (Shewchuk's
/// grow-expansion with zero elimination). Components are kept in increasing
/// magnitude; the represented value is zero iff there are no components.
class ExactSum {
 public:
  ExactSum() = default;
  explicit ExactSum(double x) { add(x); }

  void add(double x) {
    std::vector<double> next;
    next.reserve(parts_.size() + 1);
    double q = x;
    for (double e : parts_) {
      const double s = q + e;
      const double bv = s - q;
      const double err = (q - (s - bv)) + (e - bv);
      if (err != 0.0) next.push_back(err);
      q = s;
    }
    if (q != 0.0) next.push_back(q);
    parts_ = std::move(next);
  }

  ExactSum& operator+=(const ExactSum& other) {
    for (double c : other.parts_) add(c);
    return *this;
  }
  ExactSum& operator-=(const ExactSum& other) {
    for (double c : other.parts_) add(-c);
    return *this;
  }

  bool is_zero() const { return parts_.empty(); }
  /// Nearest-ish double: components summed from the smallest up.
  double value() const {
    double s = 0.0;
    for (double c : parts_) s += c;
    return s;
  }
  const std::vector<double>& components() const { return parts_; }

  friend bool exactly_equal(const ExactSum& a, const ExactSum& b) {
    ExactSum d = a;
    d -= b;
    return d.is_zero();
  }

 private:
  std::vector<double> parts_;
};

}  // namespace gfflab
