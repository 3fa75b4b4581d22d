#pragma once

#include <cstdint>
#include <memory>
#include <unordered_map>
#include <vector>

#include "rwlab/potential.hpp"
#include "rwlab/site.hpp"

namespace rwlab {

/// Default cap on the number of sites a box enumeration may touch.
inline constexpr std::uint64_t kDefaultBoxVolumeCap = 100'000'000;

/// Keyed 64-bit hash of (seed, site). Starting from h = mix64(seed + golden),
/// the coordinates x_1..x_d (sign-extended to 64 bits) are absorbed in order
/// by h <- mix64(h ^ mix64(x_i + i*golden)), i = 1..d, where mix64 is the
/// splitmix64 finalizer.
std::uint64_t site_key(std::uint64_t seed, const Site& site, int d) noexcept;

/// The i.i.d. environment V(x), x in Z^d, as a pure function of (seed, x).
///
/// value_at never allocates and never mutates, so one field can be shared by
/// any number of threads. Planted overrides (used to build adversarial test
/// environments) are applied on top of the hashed values.
class EnvironmentField {
 public:
  EnvironmentField(std::uint64_t seed, PotentialDistribution mu, int d);

  std::uint64_t seed() const noexcept { return seed_; }
  int dim() const noexcept { return d_; }
  const PotentialDistribution& law() const noexcept { return mu_; }

  double value_at(const Site& site) const {
    if (planted_) {
      auto it = planted_->find(site);
      if (it != planted_->end()) return it->second;
    }
    return mu_.sample(to_unit(site_key(seed_, site, d_)));
  }

  /// Copy of this field with the listed sites forced to `value`.
  EnvironmentField with_planted(const std::vector<Site>& sites, double value) const;

  /// Sites of `box` with value >= eps/lambda, lexicographic order.
  /// Throws ResourceError above the volume cap.
  std::vector<Site> important_sites(const Box& box, double eps, double lambda,
                                    std::uint64_t volume_cap = kDefaultBoxVolumeCap) const;

 private:
  std::uint64_t seed_;
  PotentialDistribution mu_;
  int d_;
  std::shared_ptr<const std::unordered_map<Site, double, SiteHash>> planted_;
};

}  // namespace rwlab
