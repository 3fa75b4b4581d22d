#include "rwlab/coarse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <nlohmann/json.hpp>
#include <unordered_set>

#include "rwlab/error.hpp"
#include "rwlab/parallel.hpp"

namespace rwlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool open_range(double v, double lo, double hi) { return v > lo && v < hi; }

using SiteSet = std::unordered_set<Site, SiteHash>;

SiteSet sites_within(const EnvironmentField& env, const Site& x, double r_lo, double r_hi,
                     double eps, double lambda) {
  const int d = env.dim();
  Box box{d, {}, {}};
  const auto reach = static_cast<std::int32_t>(std::ceil(r_hi));
  for (int i = 0; i < d; ++i) {
    box.lo[i] = x[i] - reach;
    box.hi[i] = x[i] + reach;
  }
  SiteSet out;
  for (const Site& s : env.important_sites(box, eps, lambda)) {
    const double r2 = static_cast<double>(dist2(s, x, d));
    if (r2 >= r_lo * r_lo && r2 <= r_hi * r_hi) out.insert(s);
  }
  return out;
}

}  // namespace

std::size_t IntervalPartition::index_of(double v) const noexcept {
  if (intervals.empty() || !(v >= intervals.front().lo)) return npos;
  const std::size_t last = intervals.size() - 1;
  if (v >= intervals[last].lo) return last;
  const double raw = std::floor((v * lambda - eps) / (eps * eps));
  std::size_t j = raw <= 0.0 ? 0 : std::min<std::size_t>(last - 1, static_cast<std::size_t>(raw));
  while (j > 0 && v < intervals[j].lo) --j;
  while (j + 1 < last && v >= intervals[j].hi) ++j;
  return j;
}

IntervalPartition partition(double eps, double lambda) {
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidArgument("partition: eps must be in (0, 1)");
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw InvalidArgument("partition: lambda must be > 0");
  IntervalPartition p;
  p.eps = eps;
  p.lambda = lambda;
  const double top = 1.0 / (eps * lambda);
  const auto count =
      static_cast<std::size_t>(std::ceil((1.0 / eps - eps) / (eps * eps) - 1e-9));
  for (std::size_t j = 0; j < count; ++j) {
    const double lo = (eps + static_cast<double>(j) * eps * eps) / lambda;
    const double hi =
        j + 1 == count ? top : (eps + static_cast<double>(j + 1) * eps * eps) / lambda;
    p.intervals.push_back({lo, std::min(hi, top)});
  }
  p.intervals.push_back({top, kInf});
  return p;
}

IntervalPartition classify(IntervalPartition p, const PotentialDistribution& mu, double L) {
  if (!(L > 0.0)) throw InvalidArgument("classify: L must be > 0");
  const double cut = std::pow(p.eps, 9) / (L * L);
  p.relevant.assign(p.intervals.size(), false);
  p.masses.assign(p.intervals.size(), 0.0);
  for (std::size_t j = 0; j < p.intervals.size(); ++j) {
    p.masses[j] = mu.mass(p.intervals[j].lo, p.intervals[j].hi);
    p.relevant[j] = p.masses[j] >= cut;
  }
  return p;
}

ScenarioParams ScenarioParams::defaults(int d, double M, double L) {
  ScenarioParams s;
  s.d = d;
  s.M = M;
  s.L = L;
  s.delta1 = std::min(s.delta / (3.0 * d), 0.002);
  return s;
}

void ScenarioParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("scenario: " + what); };
  if (d < 1 || d > kMaxDim) fail("d out of range");
  if (!(M >= 1.0)) fail("M must be >= 1");
  if (!(eps > 0.0 && eps < 1.0)) fail("eps must be in (0, 1)");
  if (!(eps0 > 0.0 && eps0 <= eps)) fail("eps0 must be in (0, eps]");
  if (!(delta > 0.0 && delta <= eps0 / 2.0)) fail("delta must be in (0, eps0/2]");
  if (!(delta1 > 0.0 && delta1 <= delta / (3.0 * d))) fail("delta1 must be in (0, delta/(3d)]");
  if (!(L > 0.0) || !std::isfinite(L)) fail("L must be > 0");
}

double ScenarioParams::h() const { return 1.0 / std::sqrt(static_cast<double>(d)); }

const char* to_string(GoodnessMode mode) {
  return mode == GoodnessMode::kCase1 ? "Case1" : "Case2";
}

GoodnessParams GoodnessParams::from(const ScenarioParams& s, double lambda) {
  GoodnessParams g;
  g.d = s.d;
  g.eps = s.eps;
  g.lambda = lambda;
  g.L = s.L;
  g.delta1 = s.delta1;
  g.delta = s.delta;
  return g;
}

void GoodnessParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("goodness: " + what); };
  if (d < 1 || d > kMaxDim) fail("d out of range");
  if (!(eps > 0.0 && eps < 1.0)) fail("eps must be in (0, 1)");
  if (!(lambda > 0.0)) fail("lambda must be > 0");
  if (!(L > 0.0) || !std::isfinite(L)) fail("L must be > 0");
  if (!(delta1 > 0.0)) fail("delta1 must be > 0");
  if (!(delta > 0.0)) fail("delta must be > 0");
  if (!(k_prime > 0.0)) fail("k_prime must be > 0");
}

const char* to_string(BoxVerdictKind kind) {
  switch (kind) {
    case BoxVerdictKind::kGood:
      return "good";
    case BoxVerdictKind::kBadRelevant:
      return "badRelevant";
    case BoxVerdictKind::kBadIrrelevant:
      return "badIrrelevant";
    case BoxVerdictKind::kBadCase2:
      return "badCase2";
  }
  return "?";
}

Box mesoscopic_box(const Site& index, double side, int d) {
  Box b{d, {}, {}};
  for (int i = 0; i < d; ++i) {
    b.lo[i] = static_cast<std::int32_t>(std::ceil(side * index[i]));
    b.hi[i] = static_cast<std::int32_t>(std::ceil(side * (index[i] + 1.0))) - 1;
  }
  return b;
}

GoodnessReport certify_region(const EnvironmentField& env, const Box& region,
                              const GoodnessParams& params, const IntervalPartition& classified,
                              GoodnessMode mode, std::uint64_t volume_cap, unsigned workers) {
  params.validate();
  const int d = params.d;
  if (env.dim() != d || region.d != d)
    throw InvalidArgument("certify_region: dimension mismatch");
  if (region.empty()) throw InvalidArgument("certify_region: empty region");
  if (mode == GoodnessMode::kCase1 && classified.relevant.size() != classified.intervals.size())
    throw InvalidArgument("certify_region: partition is not classified");
  const double side = params.delta1 * params.L;
  if (side < 1.0)
    throw ConfigError("certify: delta1 * L = " + format_double(side) +
                      " < 1, mesoscopic boxes are below lattice resolution");

  // Box index range per axis: every n whose box meets [lo_i, hi_i].
  std::array<std::int32_t, kMaxDim> nlo{}, nhi{};
  std::uint64_t volume = 1;
  for (int i = 0; i < d; ++i) {
    auto first = static_cast<std::int32_t>(std::floor(region.lo[i] / side));
    while (std::ceil(side * first) > region.lo[i]) --first;
    while (std::ceil(side * (first + 1.0)) - 1 < region.lo[i]) ++first;
    auto last = static_cast<std::int32_t>(std::floor(region.hi[i] / side));
    while (std::ceil(side * last) > region.hi[i]) --last;
    while (std::ceil(side * (last + 1.0)) - 1 < region.hi[i]) ++last;
    nlo[i] = first;
    nhi[i] = last;
    volume *= static_cast<std::uint64_t>(std::ceil(side * (last + 1.0)) - std::ceil(side * first));
    if (volume > volume_cap)
      throw ResourceError("certify_region: enumerated volume exceeds cap " +
                          std::to_string(volume_cap));
  }
  std::vector<Site> indices;
  Box index_box{d, {}, {}};
  for (int i = 0; i < d; ++i) {
    index_box.lo[i] = nlo[i];
    index_box.hi[i] = nhi[i];
  }
  index_box.for_each([&](const Site& n) { indices.push_back(n); });

  const double vol = std::pow(side, d);
  const double irrelevant_cap = 2.0 * vol * std::pow(params.eps, 9) / (params.L * params.L);
  const double case2_cap = 2.0 * std::pow(params.L, d - 2) * std::pow(params.delta, d) *
                           params.k_prime * std::pow(params.eps, 4);
  const double cutoff = params.eps / params.lambda;

  GoodnessReport report;
  report.region = region;
  report.mode = mode;
  report.delta1 = params.delta1;
  report.box_side = side;
  report.boxes = parallel_map<BoxVerdict>(indices.size(), workers, [&](std::size_t k) {
    BoxVerdict v;
    v.index = indices[k];
    const Box box = mesoscopic_box(indices[k], side, d);
    if (mode == GoodnessMode::kCase2) {
      std::int64_t important = 0;
      box.for_each([&](const Site& s) { important += env.value_at(s) >= cutoff ? 1 : 0; });
      v.count = important;
      v.threshold = case2_cap;
      if (static_cast<double>(important) > case2_cap) v.kind = BoxVerdictKind::kBadCase2;
      return v;
    }
    std::vector<std::int64_t> counts(classified.intervals.size(), 0);
    box.for_each([&](const Site& s) {
      const std::size_t j = classified.index_of(env.value_at(s));
      if (j != IntervalPartition::npos) ++counts[j];
    });
    for (std::size_t j = 0; j < counts.size(); ++j) {
      const bool rel = classified.relevant[j];
      const double cap = rel ? (1.0 + params.eps) * vol * classified.masses[j] : irrelevant_cap;
      if (static_cast<double>(counts[j]) > cap) {
        v.kind = rel ? BoxVerdictKind::kBadRelevant : BoxVerdictKind::kBadIrrelevant;
        v.interval = static_cast<int>(j);
        v.count = counts[j];
        v.threshold = cap;
        break;
      }
    }
    return v;
  });
  for (const auto& v : report.boxes)
    if (v.kind != BoxVerdictKind::kGood) ++report.bad_boxes;
  report.overall = report.bad_boxes == 0;
  return report;
}

GoodnessReport certify_region(const EnvironmentField& env, const Box& region,
                              const GoodnessParams& params, GoodnessMode mode,
                              std::uint64_t volume_cap, unsigned workers) {
  params.validate();
  const IntervalPartition p = classify(partition(params.eps, params.lambda), env.law(), params.L);
  return certify_region(env, region, params, p, mode, volume_cap, workers);
}

std::string to_json(const GoodnessReport& report) {
  using nlohmann::ordered_json;
  const int d = report.region.d;
  auto coords = [&](const Site& s) {
    ordered_json a = ordered_json::array();
    for (int i = 0; i < d; ++i) a.push_back(s[i]);
    return a;
  };
  ordered_json j;
  j["mode"] = to_string(report.mode);
  j["delta1"] = report.delta1;
  j["box_side"] = report.box_side;
  j["region"] = {{"lo", coords(report.region.lo)}, {"hi", coords(report.region.hi)}};
  j["overall"] = report.overall;
  j["bad_boxes"] = report.bad_boxes;
  ordered_json boxes = ordered_json::array();
  for (const auto& v : report.boxes) {
    ordered_json b;
    b["index"] = coords(v.index);
    b["verdict"] = to_string(v.kind);
    b["interval"] = v.interval;
    b["count"] = v.count;
    b["threshold"] = v.threshold;
    boxes.push_back(std::move(b));
  }
  j["boxes"] = std::move(boxes);
  return j.dump(2);
}

HealthReport is_healthy(const EnvironmentField& env, const Site& x, const ScenarioParams& params,
                        double lambda, std::size_t replicas, std::uint64_t seed,
                        unsigned workers) {
  params.validate();
  const int d = params.d;
  HealthReport out;
  out.threshold = std::pow(params.delta, 0.25);
  const double near = params.eps0 * params.delta * params.L;
  const SiteSet targets = sites_within(env, x, 0.0, near, params.eps, lambda);
  out.nearby_important = targets.size();
  if (targets.empty()) return out;
  const double exit2 = params.sigma_radius() * params.sigma_radius();
  const std::uint64_t root = derive_key(derive_key(seed, env.seed()), 0x6865616c);  // "heal"
  auto hits = parallel_map<char>(replicas, workers, [&](std::size_t i) -> char {
    Rng rng(derive_key(root, i));
    const Stepper stepper(d, 0.0);
    Site s = x;
    for (;;) {
      if (targets.count(s)) return 1;
      if (static_cast<double>(dist2(s, x, d)) >= exit2) return 0;
      Stepper::apply(s, stepper.draw(rng));
    }
  });
  RunningStats stats;
  for (char h : hits) stats.add(h);
  out.probability = stats.estimate();
  out.healthy = out.probability.value < out.threshold;
  return out;
}

namespace {

struct ExitSample {
  int face = 0;
  std::array<double, kMaxDim> slope{};
  double value = 0.0;
  bool pre_sigma_hit = false;
};

int face_of(const Site& v, int d, std::array<double, kMaxDim>& slope) {
  int axis = 0;
  for (int i = 1; i < d; ++i)
    if (std::abs(v[i]) > std::abs(v[axis])) axis = i;
  const double norm = std::abs(static_cast<double>(v[axis]));
  int k = 0;
  for (int i = 0; i < d; ++i)
    if (i != axis) slope[static_cast<std::size_t>(k++)] = norm > 0.0 ? v[i] / norm : 0.0;
  return 2 * axis + (v[axis] < 0 ? 1 : 0);
}

std::vector<int> bin_key(int face, const std::array<double, kMaxDim>& slope, int d, int m) {
  std::vector<int> key{face};
  for (int k = 0; k + 1 < d; ++k) {
    const double t = (slope[static_cast<std::size_t>(k)] + 1.0) / 2.0 * m;
    key.push_back(std::clamp(static_cast<int>(std::floor(t)), 0, m - 1));
  }
  return key;
}

}  // namespace

double GenericTable::non_generic_fraction() const {
  if (bins.empty()) return 0.0;
  std::size_t bad = 0;
  for (const auto& b : bins) bad += b.generic ? 0 : 1;
  return static_cast<double>(bad) / static_cast<double>(bins.size());
}

bool GenericTable::is_generic(const Site& y) const {
  if (bins.empty()) return true;
  const int d = static_cast<int>(bins.front().cell.size()) + 1;
  Site v{};
  for (int i = 0; i < d; ++i) v[i] = y[i] - center[i];
  std::array<double, kMaxDim> slope{};
  const int face = face_of(v, d, slope);
  const auto key = bin_key(face, slope, d, cells_per_edge);
  for (const auto& b : bins) {
    if (b.face != key[0]) continue;
    if (std::equal(b.cell.begin(), b.cell.end(), key.begin() + 1)) return b.generic;
  }
  return true;
}

GenericTable generic_score(const EnvironmentField& env, const Site& x, const ScenarioParams& params,
                           double lambda, const GenericOptions& options) {
  params.validate();
  const int d = params.d;
  GenericTable table;
  table.center = x;
  table.threshold = params.eps0 * params.eps0 * std::cbrt(params.delta);
  const double r_in = params.L * (params.eps0 - params.delta);
  const double r_out = params.L * (params.eps0 + 2.0 * params.delta);
  SiteSet annulus = sites_within(env, x, r_in, r_out, params.eps, lambda);
  // The annulus is half-open: drop sites on the outer sphere.
  for (auto it = annulus.begin(); it != annulus.end();)
    it = static_cast<double>(dist2(*it, x, d)) >= r_out * r_out ? annulus.erase(it) : std::next(it);
  table.annulus_important = annulus.size();
  if (annulus.empty()) {
    table.overall = {0.0, 0.0, 0};
    return table;
  }
  const double sigma2 = params.sigma_radius() * params.sigma_radius();
  const double out2 = r_out * r_out;
  const std::uint64_t root = derive_key(derive_key(options.seed, env.seed()), 0x67656e);  // "gen"
  auto samples = parallel_map<ExitSample>(options.outer_replicas, options.workers, [&](std::size_t i) {
    Rng rng(derive_key(root, i));
    const Stepper stepper(d, 0.0);
    ExitSample out;
    Site s = x;
    while (static_cast<double>(dist2(s, x, d)) < sigma2) {
      if (annulus.count(s)) out.pre_sigma_hit = true;
      Stepper::apply(s, stepper.draw(rng));
    }
    if (annulus.count(s)) out.pre_sigma_hit = true;
    Site v{};
    for (int k = 0; k < d; ++k) v[k] = s[k] - x[k];
    out.face = face_of(v, d, out.slope);
    if (out.pre_sigma_hit) {
      out.value = 1.0;
      return out;
    }
    std::size_t hits = 0;
    for (std::size_t r = 0; r < options.inner_replicas; ++r) {
      Site c = s;
      for (;;) {
        if (annulus.count(c)) {
          ++hits;
          break;
        }
        if (static_cast<double>(dist2(c, x, d)) >= out2) break;
        Stepper::apply(c, stepper.draw(rng));
      }
    }
    out.value = options.inner_replicas > 0
                    ? static_cast<double>(hits) / static_cast<double>(options.inner_replicas)
                    : 0.0;
    return out;
  });

  RunningStats overall;
  for (const auto& s : samples) overall.add(s.value);
  table.overall = overall.estimate();

  const double target = std::pow(params.eps0, -(d - 1.0));
  int m = d > 1 ? std::max(1, static_cast<int>(std::lround(
                                  std::pow(target / (2.0 * d), 1.0 / (d - 1.0)))))
                : 1;
  std::map<std::vector<int>, RunningStats> grouped;
  for (;;) {
    grouped.clear();
    for (const auto& s : samples) grouped[bin_key(s.face, s.slope, d, m)].add(s.value);
    bool thin = false;
    for (const auto& [key, stats] : grouped) thin = thin || stats.count() < options.min_per_bin;
    if (!thin) break;
    if (m == 1) {
      table.insufficient = true;
      break;
    }
    m = std::max(1, m / 2);
    table.widened = true;
  }
  table.cells_per_edge = m;
  for (const auto& [key, stats] : grouped) {
    ExitBin b;
    b.face = key[0];
    b.cell.assign(key.begin() + 1, key.end());
    b.samples = stats.count();
    b.score = stats.mean();
    b.std_error = stats.stderr_of_mean();
    b.generic = b.score < table.threshold;
    table.bins.push_back(std::move(b));
  }
  return table;
}

const char* to_string(EventKind kind) {
  switch (kind) {
    case EventKind::kAhLM:
      return "A_hL_M";
    case EventKind::kTildeA:
      return "TildeA";
    case EventKind::kAM:
      return "A_M_eps0_delta";
    case EventKind::kChain:
      return "Chain";
    case EventKind::kCase2:
      return "Case2";
  }
  return "?";
}

std::int64_t tilde_a_deadline(const ScenarioParams& params) {
  return static_cast<std::int64_t>(
      std::floor(params.M / params.h() * (1.0 + params.eps) / (params.eps0 * params.eps0)));
}

namespace {

struct Geometry {
  int d;
  double ML, sq, L, eps0L;
  // Lattice layer standing for the hyperplane {x_1 = ML}.
  std::int64_t plane;

  explicit Geometry(const ScenarioParams& p)
      : d(p.d),
        ML(p.M * p.L),
        sq(std::sqrt(p.M) * p.L),
        L(p.L),
        eps0L(p.eps0 * p.L),
        plane(static_cast<std::int64_t>(std::ceil(p.M * p.L))) {}

  bool rest_within(const Site& s, double half) const {
    for (int k = 2; k < d; ++k)
      if (!open_range(s[k], -half, half)) return false;
    return true;
  }
  // {x_1 = ML} x (sq/2, 3sq/2) x (-sq/2, sq/2)^{d-2}
  bool target(const Site& s, double x2_lo, double x2_hi) const {
    return s[0] == plane && (d < 2 || open_range(s[1], x2_lo, x2_hi)) && rest_within(s, sq / 2);
  }
  // (x0_1 - 2L, inf) x (-sq, 2sq) x (-sq, sq)^{d-2}
  bool tube(const Site& s, double back) const {
    return s[0] > back && (d < 2 || open_range(s[1], -sq, 2 * sq)) && rest_within(s, sq);
  }
};

EventOutcome eval_a(const std::vector<Site>& path, const Geometry& g, double tmax, double back,
                    std::int64_t deadline_time /* -1: none */) {
  EventOutcome out;
  for (std::size_t k = 0; k < path.size(); ++k) {
    const auto t = static_cast<std::int64_t>(k);
    if (deadline_time >= 0 && t >= deadline_time) return out;
    if (t > tmax) return out;
    if (!g.tube(path[k], back)) return out;
    if (g.target(path[k], g.sq / 2, 1.5 * g.sq)) {
      out.occurred = true;
      out.hit_time = t;
      return out;
    }
  }
  out.undecided = true;
  return out;
}

}  // namespace

EventOutcome evaluate_event(const TrajectorySummary& traj, const ScenarioParams& params,
                            const EventSpec& spec) {
  params.validate();
  const auto& path = traj.path;
  if (path.empty()) throw InvalidArgument("evaluate_event: trajectory has no recorded path");
  const Geometry g(params);
  const int d = params.d;
  std::vector<std::int64_t> sigma = traj.sigma_indices;
  if (sigma.empty()) sigma = sigma_times(path, d, params.sigma_radius());
  const double f_cap = (1.0 + params.eps) * params.M * std::sqrt(static_cast<double>(d)) /
                       (params.eps0 * params.eps0);
  const double inf = kInf;

  switch (spec.kind) {
    case EventKind::kAhLM: {
      const double tmax = params.M * params.L * params.L / params.h();
      return eval_a(path, g, tmax, path[0][0] - 2.0 * params.L, -1);
    }
    case EventKind::kTildeA: {
      const std::int64_t K = tilde_a_deadline(params);
      const std::int64_t deadline =
          static_cast<std::size_t>(K) < sigma.size() ? sigma[static_cast<std::size_t>(K)] : -1;
      EventOutcome out = eval_a(path, g, inf, path[0][0] - 2.0 * params.L, deadline);
      if (out.undecided && deadline >= 0) out.undecided = false;
      // F: first sigma index at or after the hitting time of {x_1 >= ML}.
      std::int64_t plane_time = -1;
      for (std::size_t k = 0; k < path.size(); ++k)
        if (path[k][0] >= g.plane) {
          plane_time = static_cast<std::int64_t>(k);
          break;
        }
      if (plane_time >= 0) {
        for (std::size_t i = 0; i < sigma.size(); ++i)
          if (sigma[i] >= plane_time) {
            out.F = static_cast<std::int64_t>(i);
            break;
          }
      }
      return out;
    }
    case EventKind::kAM:
    case EventKind::kChain: {
      std::vector<int> cols = spec.path_columns;
      if (spec.kind == EventKind::kAM) cols = {0, 1};
      if (cols.size() < 2 || cols[0] != 0)
        throw InvalidArgument("evaluate_event: Chain needs path columns j_0 = 0, j_1, ...");
      EventOutcome out;
      out.F = 0;
      std::size_t start = 0;
      const std::size_t blocks = cols.size() - 1;
      for (std::size_t i = 0; i < blocks; ++i) {
        const double base = static_cast<double>(i) * g.ML;
        const double front = base + g.ML;
        const double jc = cols[i + 1];
        // The single-block event targets (sq/2, 3sq/2) inside (-sq, 2sq);
        // chain blocks centre on column j_{i+1}.
        const bool single = spec.kind == EventKind::kAM;
        const double t_lo = single ? g.sq / 2 : (jc - 0.5) * g.sq;
        const double t_hi = single ? 1.5 * g.sq : (jc + 0.5) * g.sq;
        const double u_lo = single ? -g.sq : (jc - 2.0) * g.sq;
        const double u_hi = single ? 2.0 * g.sq : (jc + 2.0) * g.sq;
        const double rest_t = g.sq / 2;
        const double rest_u = single ? g.sq : 2.0 * g.sq;
        auto in_rest = [&](const Site& s, double half) {
          for (int k = 2; k < d; ++k)
            if (!open_range(s[k], -half, half)) return false;
          return true;
        };
        auto in_u = [&](const Site& s) {
          return open_range(s[0], base - 3.0 * g.L, front) &&
                 (d < 2 || open_range(s[1], u_lo, u_hi)) && in_rest(s, rest_u);
        };
        auto in_t = [&](const Site& s) {
          return open_range(s[0], front - g.eps0L, front) &&
                 (d < 2 || open_range(s[1], t_lo, t_hi)) && in_rest(s, rest_t);
        };
        std::int64_t F = -1;
        bool hit = false;
        std::size_t j = 0;
        for (;; ++j) {
          if (start + j >= sigma.size()) {
            out.undecided = true;
            return out;
          }
          const Site& z = path[static_cast<std::size_t>(sigma[start + j])];
          if (F < 0 && (single ? z[0] > front - g.eps0L : z[0] >= front - g.eps0L))
            F = static_cast<std::int64_t>(j);
          if (!in_u(z)) return out;
          if (in_t(z)) {
            hit = true;
            break;
          }
        }
        if (!hit || F < 0) return out;
        out.F = std::max(out.F, F);
        if (static_cast<double>(F) > f_cap) return out;
        if (spec.generic_pair) {
          for (std::int64_t q = 0; q <= F; ++q) {
            const std::size_t a = start + static_cast<std::size_t>(q);
            if (a + 1 >= sigma.size()) {
              out.undecided = true;
              return out;
            }
            if (!spec.generic_pair(path[static_cast<std::size_t>(sigma[a])],
                                   path[static_cast<std::size_t>(sigma[a + 1])]))
              return out;
          }
        }
        start += static_cast<std::size_t>(F);
      }
      out.occurred = true;
      return out;
    }
    case EventKind::kCase2: {
      EventOutcome out;
      const double sd = std::sqrt(static_cast<double>(d));
      const double chi_cap = spec.chi == ChiReading::kLiteral
                                 ? params.M * sd * d
                                 : params.M * params.L * params.L * sd * d;
      auto in_u = [&](const Site& s) {
        return s[0] >= -3.0 * g.L && s[0] <= g.ML && (d < 2 || open_range(s[1], -g.sq, 2 * g.sq)) &&
               g.rest_within(s, g.sq);
      };
      bool first_target = false;
      for (std::size_t k = 0; k < path.size(); ++k) {
        const auto t = static_cast<std::int64_t>(k);
        const Site& s = path[k];
        if (!first_target && !in_u(s)) return out;
        if (spec.important && spec.important(s)) return out;
        if (!first_target && g.target(s, g.sq / 2, 1.5 * g.sq)) first_target = true;
        if (g.target(s, g.sq, 3.0 * g.sq)) {
          out.hit_time = t;
          if (!first_target) return out;
          if (static_cast<double>(t) > chi_cap) return out;
          if (spec.good_point && !spec.good_point(s)) return out;
          out.occurred = true;
          return out;
        }
        if (static_cast<double>(t) > chi_cap) return out;
      }
      out.undecided = true;
      return out;
    }
  }
  return {};
}

std::vector<EventRate> event_rates(const ScenarioParams& params, const std::vector<EventSpec>& specs,
                                   std::size_t replicas, std::uint64_t seed, unsigned workers) {
  params.validate();
  const int d = params.d;
  const double radius = params.sigma_radius();
  if (radius < 1.0) throw ConfigError("events: eps0 * L must be >= 1");
  const auto hard_cap = static_cast<std::int64_t>(
      std::ceil(50.0 * params.M * params.L * params.L * d)) + 1000;
  const std::uint64_t root = derive_key(seed, 0x6576656e74);  // "event"
  // Per replica: bit 2k = occurred, bit 2k+1 = undecided.
  auto flags = parallel_map<std::uint64_t>(replicas, workers, [&](std::size_t i) {
    Rng rng(derive_key(root, i));
    const Stepper stepper(d, 0.0);
    TrajectorySummary traj;
    Site x{};
    Site center{};
    traj.path.push_back(x);
    traj.sigma_indices.push_back(0);
    std::vector<int> state(specs.size(), -1);  // -1 pending, 0 no, 1 yes
    std::size_t pending = specs.size();
    std::int64_t k = 0;
    std::size_t next_check = 256;
    while (pending > 0) {
      const bool at_cap = k >= hard_cap;
      if (at_cap || traj.path.size() >= next_check) {
        next_check = traj.path.size() * 2;
        for (std::size_t s = 0; s < specs.size(); ++s) {
          if (state[s] >= 0) continue;
          const EventOutcome o = evaluate_event(traj, params, specs[s]);
          if (!o.undecided || at_cap) {
            state[s] = o.occurred ? 1 : (o.undecided ? 2 : 0);
            --pending;
          }
        }
        if (at_cap) break;
      }
      Stepper::apply(x, stepper.draw(rng));
      ++k;
      traj.path.push_back(x);
      if (static_cast<double>(dist2(x, center, d)) >= radius * radius) {
        traj.sigma_indices.push_back(k);
        center = x;
      }
    }
    std::uint64_t bits = 0;
    for (std::size_t s = 0; s < specs.size(); ++s) {
      if (state[s] == 1) bits |= std::uint64_t{1} << (2 * s);
      if (state[s] == 2) bits |= std::uint64_t{1} << (2 * s + 1);
    }
    return bits;
  });
  std::vector<EventRate> out;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    EventRate r;
    r.kind = specs[s].kind;
    RunningStats stats;
    for (auto b : flags) {
      const bool hit = (b >> (2 * s)) & 1u;
      r.hits += hit;
      r.undecided += (b >> (2 * s + 1)) & 1u;
      stats.add(hit ? 1.0 : 0.0);
    }
    r.probability = stats.estimate();
    r.rate = r.hits > 0 ? -std::log(r.probability.value) / params.M : kInf;
    out.push_back(r);
  }
  return out;
}

}  // namespace rwlab
