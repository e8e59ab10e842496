#ifndef PVSEVAL_MORPHOLOGY_HPP
#define PVSEVAL_MORPHOLOGY_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "pvseval/ccl.hpp"
#include "pvseval/error.hpp"
#include "pvseval/volume.hpp"

namespace pvseval {

/// Visits every foreground voxel of `m` as (index, x, y, z).
template <typename Fn>
void for_each_foreground(const BinaryMask& m, Fn&& fn) {
  const auto& d = m.dims();
  const auto bits = m.data();
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y) {
      const std::size_t base = d.index(0, y, z);
      const std::uint8_t* row = bits.data() + base;
      std::size_t x = 0;
      while (x < d.nx) {
        const void* hit = std::memchr(row + x, 1, d.nx - x);
        if (!hit) break;
        x = static_cast<std::size_t>(static_cast<const std::uint8_t*>(hit) - row);
        fn(base + x, x, y, z);
        ++x;
      }
    }
}

/// Visits in-bounds neighbors of (x, y, z) as (index).
template <typename Fn>
void for_each_neighbor(const Dims& d, const std::vector<Offset3>& offsets, std::size_t x, std::size_t y,
                       std::size_t z, Fn&& fn) {
  for (const auto& o : offsets) {
    const auto nx = static_cast<std::ptrdiff_t>(x) + o[0];
    const auto ny = static_cast<std::ptrdiff_t>(y) + o[1];
    const auto nz = static_cast<std::ptrdiff_t>(z) + o[2];
    if (nx < 0 || ny < 0 || nz < 0 || nx >= static_cast<std::ptrdiff_t>(d.nx) ||
        ny >= static_cast<std::ptrdiff_t>(d.ny) || nz >= static_cast<std::ptrdiff_t>(d.nz))
      continue;
    fn(d.index(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny), static_cast<std::size_t>(nz)));
  }
}

/// `m` plus every conn-neighbor of its foreground, clipped to the grid.
inline BinaryMask dilate_once(const BinaryMask& m, Connectivity conn = Connectivity::TwentySix) {
  const auto offsets = neighbor_offsets(conn);
  std::vector<std::uint8_t> out(m.data().begin(), m.data().end());
  for_each_foreground(m, [&](std::size_t, std::size_t x, std::size_t y, std::size_t z) {
    for_each_neighbor(m.dims(), offsets, x, y, z, [&](std::size_t j) { out[j] = 1; });
  });
  return BinaryMask(m.grid(), std::move(out));
}

/// The one-voxel ring around a mask: dilate_once(m) minus m.
struct Shell {
  BinaryMask mask;
};

inline Shell shell(const BinaryMask& m, Connectivity conn = Connectivity::TwentySix) {
  return Shell{subtract(dilate_once(m, conn), m)};
}

enum class ContrastMode { Global, PerCluster };

inline std::string contrast_mode_name(ContrastMode m) {
  return m == ContrastMode::Global ? "global" : "per_cluster";
}

struct ContrastStat {
  double mask_mean = 0;
  double shell_mean = 0;
  double abs_contrast = 0;
  std::size_t mask_voxels = 0;
  std::size_t shell_voxels = 0;
  /// Clusters that contributed (per-cluster mode); 1 in global mode.
  std::size_t clusters = 0;
  ContrastMode mode = ContrastMode::Global;
};

/// |mean(image over m) - mean(image over shell(m))|, pooled over the whole
/// mask.
inline ContrastStat contrast_stat(const Volume3D<double>& image, const BinaryMask& m,
                                  Connectivity conn = Connectivity::TwentySix) {
  require_same_grid(image.grid(), m.grid(), "image", "mask");
  if (m.empty()) throw Error(Errc::EmptyMask, "contrast needs a non-empty mask");
  const Shell ring = shell(m, conn);
  if (ring.mask.empty()) throw Error(Errc::EmptyShell, "mask fills the grid; its shell is empty");

  double in_sum = 0, out_sum = 0;
  const auto px = image.data();
  for_each_foreground(m, [&](std::size_t i, std::size_t, std::size_t, std::size_t) { in_sum += px[i]; });
  for_each_foreground(ring.mask, [&](std::size_t i, std::size_t, std::size_t, std::size_t) { out_sum += px[i]; });

  ContrastStat s;
  s.mask_voxels = m.count();
  s.shell_voxels = ring.mask.count();
  s.mask_mean = in_sum / static_cast<double>(s.mask_voxels);
  s.shell_mean = out_sum / static_cast<double>(s.shell_voxels);
  s.abs_contrast = std::abs(s.mask_mean - s.shell_mean);
  s.clusters = 1;
  s.mode = ContrastMode::Global;
  return s;
}

/// Each cluster against its own ring (dilation of the cluster minus the whole
/// mask); the reported means and contrast are averages over clusters with a
/// non-empty ring.
inline ContrastStat contrast_stat_per_cluster(const Volume3D<double>& image, const BinaryMask& m,
                                              Connectivity conn = Connectivity::TwentySix) {
  require_same_grid(image.grid(), m.grid(), "image", "mask");
  if (m.empty()) throw Error(Errc::EmptyMask, "contrast needs a non-empty mask");
  const LabelMap lm = label_components(m, conn);
  const auto offsets = neighbor_offsets(conn);
  const auto& d = m.dims();
  const auto px = image.data();

  const std::size_t k = lm.count();
  std::vector<double> in_sum(k, 0.0), out_sum(k, 0.0);
  std::vector<std::size_t> out_n(k, 0);
  // group voxel indices by cluster (counting sort on id)
  std::vector<std::size_t> start(k + 1, 0);
  for (std::size_t c = 0; c < k; ++c) start[c + 1] = start[c] + lm.sizes[c];
  std::vector<std::size_t> members(m.count());
  {
    std::vector<std::size_t> fill(start.begin(), start.end() - 1);
    for_each_foreground(m, [&](std::size_t i, std::size_t, std::size_t, std::size_t) {
      members[fill[lm.labels[i] - 1]++] = i;
    });
  }
  // stamp[j] == id once voxel j has been counted in cluster id's ring
  std::vector<std::uint32_t> stamp(d.voxels(), 0);
  for (std::size_t c = 0; c < k; ++c) {
    const auto id = static_cast<std::uint32_t>(c + 1);
    for (std::size_t p = start[c]; p < start[c + 1]; ++p) {
      const std::size_t i = members[p];
      in_sum[c] += px[i];
      const std::size_t x = i % d.nx, y = (i / d.nx) % d.ny, z = i / (d.nx * d.ny);
      for_each_neighbor(d, offsets, x, y, z, [&](std::size_t j) {
        if (m.test(j) || stamp[j] == id) return;
        stamp[j] = id;
        out_sum[c] += px[j];
        ++out_n[c];
      });
    }
  }

  ContrastStat s;
  s.mode = ContrastMode::PerCluster;
  s.mask_voxels = m.count();
  double mask_acc = 0, shell_acc = 0, contrast_acc = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (out_n[c] == 0) continue;
    const double mi = in_sum[c] / static_cast<double>(lm.sizes[c]);
    const double mo = out_sum[c] / static_cast<double>(out_n[c]);
    mask_acc += mi;
    shell_acc += mo;
    contrast_acc += std::abs(mi - mo);
    s.shell_voxels += out_n[c];
    ++s.clusters;
  }
  if (s.clusters == 0) throw Error(Errc::EmptyShell, "no cluster has a non-empty ring");
  const double n = static_cast<double>(s.clusters);
  s.mask_mean = mask_acc / n;
  s.shell_mean = shell_acc / n;
  s.abs_contrast = contrast_acc / n;
  return s;
}

}  // namespace pvseval

#endif  // PVSEVAL_MORPHOLOGY_HPP
