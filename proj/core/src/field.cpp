#include "rwlab/field.hpp"

#include <string>

#include "rwlab/error.hpp"

namespace rwlab {

std::uint64_t site_key(std::uint64_t seed, const Site& site, int d) noexcept {
  std::uint64_t h = mix64(seed + kGolden);
  for (int i = 0; i < d; ++i) {
    const auto w = static_cast<std::uint64_t>(static_cast<std::int64_t>(site[i]));
    h = mix64(h ^ mix64(w + static_cast<std::uint64_t>(i + 1) * kGolden));
  }
  return h;
}

EnvironmentField::EnvironmentField(std::uint64_t seed, PotentialDistribution mu, int d)
    : seed_(seed), mu_(std::move(mu)), d_(d) {
  if (d < 1 || d > kMaxDim)
    throw InvalidArgument("dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
}

EnvironmentField EnvironmentField::with_planted(const std::vector<Site>& sites,
                                                double value) const {
  auto table = planted_ ? std::make_shared<std::unordered_map<Site, double, SiteHash>>(*planted_)
                        : std::make_shared<std::unordered_map<Site, double, SiteHash>>();
  for (const auto& s : sites) (*table)[s] = value;
  EnvironmentField out = *this;
  out.planted_ = std::move(table);
  return out;
}

std::vector<Site> EnvironmentField::important_sites(const Box& box, double eps, double lambda,
                                                    std::uint64_t volume_cap) const {
  if (!(eps > 0.0) || !(lambda > 0.0)) throw InvalidArgument("eps and lambda must be > 0");
  if (box.volume() > volume_cap)
    throw ResourceError("box volume " + std::to_string(box.volume()) + " exceeds cap " +
                        std::to_string(volume_cap));
  const double cutoff = eps / lambda;
  std::vector<Site> out;
  box.for_each([&](const Site& s) {
    if (value_at(s) >= cutoff) out.push_back(s);
  });
  return out;
}

}  // namespace rwlab
