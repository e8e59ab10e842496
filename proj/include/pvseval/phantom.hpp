#ifndef PVSEVAL_PHANTOM_HPP
#define PVSEVAL_PHANTOM_HPP

// Synthetic volumes with thin tubular structures and exactly known ground
// truth, plus seeded perturbations of a truth mask.
//
// Each tube is the set of voxels within radius r of a centerline sampled
// every quarter voxel; the centerline is a segment with one low-amplitude
// sinusoidal bend. The voxel nearest each sample is always included, which
// keeps a tube 26-connected even for r < sqrt(3)/2. A candidate tube is
// rejected if any of its voxels lies within Chebyshev distance `clearance`
// of an accepted tube, so accepted tubes are separate 26-components and
// their one-voxel rings do not touch when clearance >= 2.

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pvseval/ccl.hpp"
#include "pvseval/error.hpp"
#include "pvseval/morphology.hpp"
#include "pvseval/rng.hpp"
#include "pvseval/volume.hpp"

namespace pvseval::phantom {

struct PhantomSpec {
  Dims dims{64, 64, 64};
  Spacing spacing{0.8, 0.8, 0.8};
  std::size_t n_tubes = 10;
  double radius_min = 0.5;  ///< voxels; 0.5..1.0 gives 1-2 voxel diameters
  double radius_max = 1.0;
  double length_min = 8.0;  ///< voxels
  double length_max = 20.0;
  std::size_t clearance = 3;  ///< voxels of background kept between tubes
  double bend_max = 1.5;      ///< peak sinusoidal displacement, voxels
  double background_mean = 100.0;
  double background_sd = 1.0;
  double tube_offset = 6.0;  ///< signed; negative mimics dark tubes
  std::uint64_t seed = 1;
  std::size_t max_attempts = 2000;  ///< per tube
};

struct Phantom {
  Volume3D<double> image;
  BinaryMask truth;
  std::size_t cluster_count = 0;
};

namespace detail {

using Vec3 = std::array<double, 3>;

inline Vec3 add(Vec3 a, Vec3 b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline Vec3 scale(Vec3 a, double s) { return {a[0] * s, a[1] * s, a[2] * s}; }
inline double norm(Vec3 a) { return std::sqrt(a[0] * a[0] + a[1] * a[1] + a[2] * a[2]); }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}

inline Vec3 random_direction(Rng& rng) {
  for (;;) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double n = norm(v);
    if (n > 1e-9) return scale(v, 1.0 / n);
  }
}

// Voxels of one candidate tube, or empty if it leaves the grid.
inline std::vector<std::size_t> rasterize(const Dims& d, Vec3 start, Vec3 dir, double length, Vec3 bend_dir,
                                          double bend, double radius, std::vector<std::uint32_t>& stamp,
                                          std::uint32_t tag) {
  std::vector<std::size_t> voxels;
  const auto steps = static_cast<std::size_t>(std::ceil(length / 0.25));
  const auto r_cells = static_cast<long>(std::ceil(radius));
  auto in_grid = [&](long x, long y, long z) {
    return x >= 0 && y >= 0 && z >= 0 && x < static_cast<long>(d.nx) && y < static_cast<long>(d.ny) &&
           z < static_cast<long>(d.nz);
  };
  auto mark = [&](long x, long y, long z) {
    const std::size_t i = d.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y), static_cast<std::size_t>(z));
    if (stamp[i] != tag) {
      stamp[i] = tag;
      voxels.push_back(i);
    }
  };
  for (std::size_t s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / static_cast<double>(steps);
    const Vec3 c = add(add(start, scale(dir, t * length)), scale(bend_dir, bend * std::sin(std::numbers::pi * t)));
    const long cx = std::lround(c[0]), cy = std::lround(c[1]), cz = std::lround(c[2]);
    if (!in_grid(cx, cy, cz)) return {};
    mark(cx, cy, cz);
    for (long z = cz - r_cells; z <= cz + r_cells; ++z)
      for (long y = cy - r_cells; y <= cy + r_cells; ++y)
        for (long x = cx - r_cells; x <= cx + r_cells; ++x) {
          const double dx = static_cast<double>(x) - c[0];
          const double dy = static_cast<double>(y) - c[1];
          const double dz = static_cast<double>(z) - c[2];
          if (dx * dx + dy * dy + dz * dz > radius * radius) continue;
          if (!in_grid(x, y, z)) return {};
          mark(x, y, z);
        }
  }
  return voxels;
}

}  // namespace detail

inline void validate(const PhantomSpec& s) {
  if (s.dims.voxels() == 0) throw Error(Errc::BadParameter, "phantom grid is empty");
  if (s.dims.voxels() >= UINT32_MAX) throw Error(Errc::BadParameter, "phantom grid too large");
  if (!(s.radius_min > 0) || s.radius_max < s.radius_min)
    throw Error(Errc::BadParameter, "tube radius range must satisfy 0 < min <= max");
  if (!(s.length_min > 0) || s.length_max < s.length_min)
    throw Error(Errc::BadParameter, "tube length range must satisfy 0 < min <= max");
  if (s.clearance < 1) throw Error(Errc::BadParameter, "clearance must be at least one voxel");
  if (s.bend_max < 0) throw Error(Errc::BadParameter, "bend amplitude must be non-negative");
  if (!(s.background_sd >= 0)) throw Error(Errc::BadParameter, "noise SD must be non-negative");
}

inline Phantom generate(const PhantomSpec& spec) {
  validate(spec);
  using namespace detail;
  const Grid grid = Grid::make(spec.dims, spec.spacing);
  const Dims& d = spec.dims;
  Rng rng(spec.seed);

  BinaryMask truth(grid);
  std::vector<std::uint8_t> blocked(d.voxels(), 0);
  std::vector<std::uint32_t> stamp(d.voxels(), 0);
  std::uint32_t tag = 0;
  const long c = static_cast<long>(spec.clearance);

  for (std::size_t tube = 0; tube < spec.n_tubes; ++tube) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < spec.max_attempts && !placed; ++attempt) {
      const double radius = rng.uniform(spec.radius_min, spec.radius_max);
      const double length = rng.uniform(spec.length_min, spec.length_max);
      const Vec3 start{rng.uniform(0.0, static_cast<double>(d.nx - 1)), rng.uniform(0.0, static_cast<double>(d.ny - 1)),
                       rng.uniform(0.0, static_cast<double>(d.nz - 1))};
      const Vec3 dir = random_direction(rng);
      Vec3 side = cross(dir, random_direction(rng));
      const double side_norm = norm(side);
      side = side_norm > 1e-9 ? scale(side, 1.0 / side_norm) : Vec3{0, 0, 0};
      const double bend = rng.uniform(0.0, spec.bend_max);

      ++tag;
      const auto voxels = rasterize(d, start, dir, length, side, bend, radius, stamp, tag);
      if (voxels.empty()) continue;
      bool clash = false;
      for (auto i : voxels)
        if (blocked[i]) {
          clash = true;
          break;
        }
      if (clash) continue;

      for (auto i : voxels) {
        truth.set(i);
        const long x = static_cast<long>(i % d.nx), y = static_cast<long>((i / d.nx) % d.ny),
                   z = static_cast<long>(i / (d.nx * d.ny));
        for (long zz = std::max(0L, z - c); zz <= std::min<long>(static_cast<long>(d.nz) - 1, z + c); ++zz)
          for (long yy = std::max(0L, y - c); yy <= std::min<long>(static_cast<long>(d.ny) - 1, y + c); ++yy)
            for (long xx = std::max(0L, x - c); xx <= std::min<long>(static_cast<long>(d.nx) - 1, x + c); ++xx)
              blocked[d.index(static_cast<std::size_t>(xx), static_cast<std::size_t>(yy), static_cast<std::size_t>(zz))] = 1;
      }
      placed = true;
    }
    if (!placed)
      throw Error(Errc::InfeasiblePacking, "could not place tube " + std::to_string(tube + 1) + " of " +
                                               std::to_string(spec.n_tubes) + " after " +
                                               std::to_string(spec.max_attempts) + " attempts");
  }

  Volume3D<double> image(grid);
  auto px = image.data();
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = rng.normal(spec.background_mean, spec.background_sd);
    if (truth.test(i)) px[i] += spec.tube_offset;
  }
  return Phantom{std::move(image), std::move(truth), spec.n_tubes};
}

// ---------------------------------------------------------------------------
// perturbations

/// Removes exactly round(f * |mask|) foreground voxels.
struct DeleteFraction {
  double fraction = 0;
};
struct DilateOnce {
  Connectivity connectivity = Connectivity::TwentySix;
};
/// Removes k whole clusters.
struct DropClusters {
  std::size_t k = 0;
  Connectivity connectivity = Connectivity::TwentySix;
};
/// Shifts the mask; voxels leaving the grid are lost.
struct Translate {
  long dx = 0, dy = 0, dz = 0;
};

using Perturbation = std::variant<DeleteFraction, DilateOnce, DropClusters, Translate>;

inline std::size_t deletion_count(std::size_t voxels, double fraction) {
  return static_cast<std::size_t>(std::llround(fraction * static_cast<double>(voxels)));
}

inline BinaryMask perturb(const BinaryMask& truth, const Perturbation& p, std::uint64_t seed) {
  Rng rng(seed);
  return std::visit(
      [&](const auto& op) -> BinaryMask {
        using T = std::decay_t<decltype(op)>;
        if constexpr (std::is_same_v<T, DeleteFraction>) {
          if (!(op.fraction >= 0.0 && op.fraction <= 1.0))
            throw Error(Errc::BadParameter, "delete fraction must lie in [0, 1]");
          std::vector<std::size_t> fg;
          fg.reserve(truth.count());
          for_each_foreground(truth, [&](std::size_t i, std::size_t, std::size_t, std::size_t) { fg.push_back(i); });
          const std::size_t n_del = deletion_count(fg.size(), op.fraction);
          rng.choose_front(fg, n_del);
          BinaryMask out = truth;
          for (std::size_t j = 0; j < n_del; ++j) out.set(fg[j], false);
          return out;
        } else if constexpr (std::is_same_v<T, DilateOnce>) {
          return dilate_once(truth, op.connectivity);
        } else if constexpr (std::is_same_v<T, DropClusters>) {
          const LabelMap lm = label_components(truth, op.connectivity);
          if (op.k > lm.count())
            throw Error(Errc::BadParameter, "cannot drop " + std::to_string(op.k) + " of " +
                                                std::to_string(lm.count()) + " clusters");
          std::vector<std::uint32_t> ids(lm.count());
          for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<std::uint32_t>(i + 1);
          rng.choose_front(ids, op.k);
          std::vector<std::uint8_t> drop(lm.count() + 1, 0);
          for (std::size_t j = 0; j < op.k; ++j) drop[ids[j]] = 1;
          BinaryMask out = truth;
          for (std::size_t i = 0; i < lm.labels.size(); ++i)
            if (drop[lm.labels[i]] && lm.labels[i] != 0) out.set(i, false);
          return out;
        } else {
          const Dims& d = truth.dims();
          BinaryMask out(truth.grid());
          for_each_foreground(truth, [&](std::size_t, std::size_t x, std::size_t y, std::size_t z) {
            const long nx = static_cast<long>(x) + op.dx, ny = static_cast<long>(y) + op.dy,
                       nz = static_cast<long>(z) + op.dz;
            if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<long>(d.nx) || ny >= static_cast<long>(d.ny) ||
                nz >= static_cast<long>(d.nz))
              return;
            out.set(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny), static_cast<std::size_t>(nz));
          });
          return out;
        }
      },
      p);
}

/// Parses "delete:F", "dilate", "drop:K" or "translate:DX,DY,DZ".
inline Perturbation parse_perturbation(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  const std::string_view arg = colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  auto bad = [&]() { return Error(Errc::BadParameter, "cannot parse perturbation '" + std::string(text) + "'"); };
  auto to_double = [&](std::string_view s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(std::string(s), &used);
      if (used != s.size()) throw bad();
      return v;
    } catch (const std::logic_error&) {
      throw bad();
    }
  };
  auto to_long = [&](std::string_view s) {
    long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw bad();
    return v;
  };
  if (kind == "delete") return DeleteFraction{to_double(arg)};
  if (kind == "dilate" && arg.empty()) return DilateOnce{};
  if (kind == "drop") {
    const long k = to_long(arg);
    if (k < 0) throw bad();
    return DropClusters{static_cast<std::size_t>(k)};
  }
  if (kind == "translate") {
    std::array<long, 3> o{};
    std::string_view rest = arg;
    for (std::size_t i = 0; i < 3; ++i) {
      const auto comma = rest.find(',');
      if ((i < 2) == (comma == std::string_view::npos)) throw bad();
      o[i] = to_long(rest.substr(0, comma));
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    return Translate{o[0], o[1], o[2]};
  }
  throw bad();
}

}  // namespace pvseval::phantom

#endif  // PVSEVAL_PHANTOM_HPP
