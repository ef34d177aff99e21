#include "amc/constellation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace amc {

std::string_view to_string(ConstellationKind kind) {
  switch (kind) {
    case ConstellationKind::QPSK: return "qpsk";
    case ConstellationKind::PSK8: return "8psk";
    case ConstellationKind::QAM16: return "16qam";
  }
  throw std::invalid_argument("unsupported constellation kind");
}

ConstellationKind parse_constellation_kind(std::string_view label) {
  if (label == "qpsk") return ConstellationKind::QPSK;
  if (label == "8psk") return ConstellationKind::PSK8;
  if (label == "16qam") return ConstellationKind::QAM16;
  throw std::invalid_argument("unknown constellation label '" + std::string(label) + "'");
}

namespace {

double angle_0_2pi(cplx p) {
  double a = std::arg(p);
  if (a < 0) a += 2 * std::numbers::pi;
  // Fold values that round to 2pi back onto 0 so ordering is stable.
  if (a >= 2 * std::numbers::pi - 1e-12) a = 0;
  return a;
}

void sort_points(std::vector<cplx>& pts) {
  std::sort(pts.begin(), pts.end(), [](cplx x, cplx y) {
    const double ax = angle_0_2pi(x), ay = angle_0_2pi(y);
    if (std::abs(ax - ay) > 1e-12) return ax < ay;
    return std::abs(x) < std::abs(y);
  });
}

}  // namespace

Constellation build_constellation(ConstellationKind kind) {
  using std::numbers::pi;
  std::vector<cplx> pts;
  switch (kind) {
    case ConstellationKind::QPSK:
      // Odd multiples of pi/4, so QPSK is a subset of 8-PSK.
      for (int k = 0; k < 4; ++k) pts.push_back(std::polar(1.0, pi / 4 + k * pi / 2));
      break;
    case ConstellationKind::PSK8:
      for (int k = 0; k < 8; ++k) pts.push_back(std::polar(1.0, k * pi / 4));
      break;
    case ConstellationKind::QAM16: {
      const double scale = 1.0 / std::sqrt(10.0);
      for (int i : {-3, -1, 1, 3})
        for (int q : {-3, -1, 1, 3}) pts.emplace_back(i * scale, q * scale);
      break;
    }
    default:
      throw std::invalid_argument("unsupported constellation kind");
  }
  sort_points(pts);
  return Constellation{kind, std::move(pts)};
}

ConstellationSet::ConstellationSet(std::span<const ConstellationKind> kinds) {
  if (kinds.empty()) throw std::invalid_argument("constellation set must not be empty");
  for (std::size_t i = 0; i < kinds.size(); ++i)
    for (std::size_t j = i + 1; j < kinds.size(); ++j)
      if (kinds[i] == kinds[j])
        throw std::invalid_argument("duplicate constellation '" + std::string(to_string(kinds[i])) + "'");

  for (auto k : kinds) members_.push_back(build_constellation(k));

  for (const auto& m : members_)
    for (cplx p : m.points) {
      const bool seen = std::any_of(super_points_.begin(), super_points_.end(),
                                    [&](cplx q) { return std::abs(p - q) <= kPointTolerance; });
      if (!seen) super_points_.push_back(p);
    }
  sort_points(super_points_);

  membership_.resize(super_points_.size());
  member_points_.resize(members_.size());
  for (std::size_t a = 0; a < members_.size(); ++a) {
    for (cplx q : members_[a].points) {
      for (std::size_t p = 0; p < super_points_.size(); ++p) {
        if (std::abs(super_points_[p] - q) <= kPointTolerance) {
          member_points_[a].push_back(static_cast<int>(p));
          break;
        }
      }
    }
  }
  for (std::size_t p = 0; p < super_points_.size(); ++p)
    for (std::size_t a = 0; a < members_.size(); ++a) {
      const auto& mp = member_points_[a];
      if (std::find(mp.begin(), mp.end(), static_cast<int>(p)) != mp.end())
        membership_[p].push_back(static_cast<int>(a));
    }

  for (std::size_t p = 0; p < super_points_.size(); ++p)
    for (int a : membership_[p]) pairs_.push_back({static_cast<int>(p), a});
}

bool ConstellationSet::contains(std::size_t point, std::size_t member) const {
  const auto& m = membership_.at(point);
  return std::find(m.begin(), m.end(), static_cast<int>(member)) != m.end();
}

int ConstellationSet::index_of(ConstellationKind kind) const {
  for (std::size_t a = 0; a < members_.size(); ++a)
    if (members_[a].kind == kind) return static_cast<int>(a);
  return -1;
}

ConstellationSet build_set(std::span<const ConstellationKind> kinds) { return ConstellationSet(kinds); }

}  // namespace amc
