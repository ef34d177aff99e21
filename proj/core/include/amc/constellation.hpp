#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace amc {

using cplx = std::complex<double>;

enum class ConstellationKind { QPSK, PSK8, QAM16 };

/// Lowercase config/CLI label: "qpsk", "8psk", "16qam".
std::string_view to_string(ConstellationKind kind);
/// Inverse of to_string. Throws std::invalid_argument on an unknown label.
ConstellationKind parse_constellation_kind(std::string_view label);

/// A unit-average-power symbol alphabet.
struct Constellation {
  ConstellationKind kind;
  std::vector<cplx> points;

  std::size_t size() const { return points.size(); }
};

/// Point coincidence tolerance used when merging alphabets.
inline constexpr double kPointTolerance = 1e-9;

/// Builds the standard point set for `kind`, scaled to unit average power.
/// Points are ordered by angle in [0, 2pi), ties broken by magnitude.
Constellation build_constellation(ConstellationKind kind);

/// A (super-point, member) pair: one admissible value of (s_n, z_n).
struct SymbolPair {
  int point;   // index into super_points
  int member;  // index into members
};

/// The candidate alphabet set together with its superconstellation.
///
/// `super_points` is the deduplicated union of all member points, and
/// `membership[p]` lists (in ascending member order) every member containing
/// super-point `p`. `pairs` enumerates all (point, member) combinations in
/// point-major order; it is the support of the joint symbol/label draw.
class ConstellationSet {
 public:
  explicit ConstellationSet(std::span<const ConstellationKind> kinds);

  std::size_t num_members() const { return members_.size(); }
  const Constellation& member(std::size_t a) const { return members_[a]; }
  const std::vector<Constellation>& members() const { return members_; }

  const std::vector<cplx>& super_points() const { return super_points_; }
  const std::vector<std::vector<int>>& membership() const { return membership_; }
  const std::vector<SymbolPair>& pairs() const { return pairs_; }

  /// Super-point indices of member `a`, in the member's own point order.
  const std::vector<int>& member_points(std::size_t a) const { return member_points_[a]; }

  bool contains(std::size_t point, std::size_t member) const;

  /// Index of `kind` among the members, or -1.
  int index_of(ConstellationKind kind) const;

 private:
  std::vector<Constellation> members_;
  std::vector<cplx> super_points_;
  std::vector<std::vector<int>> membership_;
  std::vector<std::vector<int>> member_points_;
  std::vector<SymbolPair> pairs_;
};

/// Throws std::invalid_argument on an empty or duplicated kind list.
ConstellationSet build_set(std::span<const ConstellationKind> kinds);

}  // namespace amc
