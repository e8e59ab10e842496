#ifndef PVSEVAL_CCL_HPP
#define PVSEVAL_CCL_HPP

// 3D connected-component labeling.
//
// Foreground voxels are first collapsed into x-runs (maximal contiguous
// stretches within one row). Each run is a node of a union-find forest and is
// merged with overlapping runs in the already-scanned neighbor rows; which
// rows count, and whether diagonal contact along x counts, is fixed by the
// connectivity. Roots are always the smallest run index of their set, so
// renumbering roots in run order gives ids in x-fastest scan order.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "pvseval/error.hpp"
#include "pvseval/volume.hpp"

namespace pvseval {

enum class Connectivity : int { Six = 6, Eighteen = 18, TwentySix = 26 };

inline Connectivity connectivity_from_int(int n) {
  switch (n) {
    case 6: return Connectivity::Six;
    case 18: return Connectivity::Eighteen;
    case 26: return Connectivity::TwentySix;
    default: throw Error(Errc::BadParameter, "connectivity must be 6, 18 or 26, got " + std::to_string(n));
  }
}

constexpr int to_int(Connectivity c) noexcept { return static_cast<int>(c); }

using Offset3 = std::array<int, 3>;

/// All neighbor offsets of the given class (excluding the origin).
inline std::vector<Offset3> neighbor_offsets(Connectivity c) {
  const int max_nonzero = c == Connectivity::Six ? 1 : c == Connectivity::Eighteen ? 2 : 3;
  std::vector<Offset3> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int nz = (dx != 0) + (dy != 0) + (dz != 0);
        if (nz == 0 || nz > max_nonzero) continue;
        out.push_back({dx, dy, dz});
      }
  return out;
}

namespace ccl_detail {

struct Run {
  std::uint32_t x0, x1;  // [x0, x1)
};

struct RowLink {
  int dy, dz;
  std::uint32_t reach;  // 1 when diagonal contact along x connects
};

inline std::vector<RowLink> previous_row_links(Connectivity c) {
  switch (c) {
    case Connectivity::Six: return {{-1, 0, 0}, {0, -1, 0}};
    case Connectivity::Eighteen: return {{-1, 0, 1}, {0, -1, 1}, {-1, -1, 0}, {1, -1, 0}};
    case Connectivity::TwentySix: return {{-1, 0, 1}, {0, -1, 1}, {-1, -1, 1}, {1, -1, 1}};
  }
  return {};
}

class UnionFind {
 public:
  std::uint32_t add() {
    const auto id = static_cast<std::uint32_t>(parent_.size());
    parent_.push_back(id);
    return id;
  }
  std::uint32_t find(std::uint32_t i) {
    std::uint32_t root = i;
    while (parent_[root] != root) root = parent_[root];
    while (parent_[i] != root) {
      const auto next = parent_[i];
      parent_[i] = root;
      i = next;
    }
    return root;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a;
    else parent_[a] = b;
  }
  void reserve(std::size_t n) { parent_.reserve(n); }

 private:
  std::vector<std::uint32_t> parent_;
};

}  // namespace ccl_detail

/// Run-length view of a labeled mask. `row_start[r]..row_start[r+1]` index
/// the runs of row r = y + ny*z; `run_id[k]` is the 1-based component id.
struct Components {
  Dims dims;
  Connectivity connectivity = Connectivity::TwentySix;
  std::vector<ccl_detail::Run> runs;
  std::vector<std::size_t> row_start;
  std::vector<std::uint32_t> run_id;
  std::vector<std::size_t> sizes;  // sizes[id - 1]

  std::uint32_t count() const noexcept { return static_cast<std::uint32_t>(sizes.size()); }
  std::size_t row_of(std::size_t y, std::size_t z) const noexcept { return y + dims.ny * z; }
};

inline Components find_components(const BinaryMask& m, Connectivity conn = Connectivity::TwentySix) {
  using namespace ccl_detail;
  Components c;
  c.dims = m.dims();
  c.connectivity = conn;
  const auto& d = c.dims;
  const std::size_t rows = d.ny * d.nz;
  c.row_start.assign(rows + 1, 0);
  const auto bits = m.data();

  // runs, row by row
  for (std::size_t r = 0; r < rows; ++r) {
    c.row_start[r] = c.runs.size();
    const std::uint8_t* row = bits.data() + r * d.nx;
    std::size_t x = 0;
    while (x < d.nx) {
      if (!row[x]) {
        // skip background quickly
        const void* hit = std::memchr(row + x, 1, d.nx - x);
        if (!hit) break;
        x = static_cast<std::size_t>(static_cast<const std::uint8_t*>(hit) - row);
      }
      const std::size_t x0 = x;
      while (x < d.nx && row[x]) ++x;
      c.runs.push_back({static_cast<std::uint32_t>(x0), static_cast<std::uint32_t>(x)});
    }
  }
  c.row_start[rows] = c.runs.size();

  UnionFind uf;
  uf.reserve(c.runs.size());
  for (std::size_t k = 0; k < c.runs.size(); ++k) uf.add();

  const auto links = previous_row_links(conn);
  for (std::size_t z = 0; z < d.nz; ++z) {
    for (std::size_t y = 0; y < d.ny; ++y) {
      const std::size_t r = c.row_of(y, z);
      const std::size_t cur_begin = c.row_start[r], cur_end = c.row_start[r + 1];
      if (cur_begin == cur_end) continue;
      for (const auto& link : links) {
        const auto ny = static_cast<std::ptrdiff_t>(y) + link.dy;
        const auto nz = static_cast<std::ptrdiff_t>(z) + link.dz;
        if (ny < 0 || nz < 0 || ny >= static_cast<std::ptrdiff_t>(d.ny)) continue;
        const std::size_t nr = c.row_of(static_cast<std::size_t>(ny), static_cast<std::size_t>(nz));
        std::size_t i = cur_begin, j = c.row_start[nr];
        const std::size_t j_end = c.row_start[nr + 1];
        while (i < cur_end && j < j_end) {
          const Run& a = c.runs[i];
          const Run& b = c.runs[j];
          if (b.x1 + link.reach <= a.x0) {
            ++j;
          } else if (a.x1 + link.reach <= b.x0) {
            ++i;
          } else {
            uf.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
            if (a.x1 < b.x1) ++i;
            else ++j;
          }
        }
      }
    }
  }

  // roots are minimal run indices, so first-seen order is scan order
  c.run_id.resize(c.runs.size());
  for (std::size_t k = 0; k < c.runs.size(); ++k) {
    const auto root = uf.find(static_cast<std::uint32_t>(k));
    if (root == k) {
      c.sizes.push_back(0);
      c.run_id[k] = static_cast<std::uint32_t>(c.sizes.size());
    } else {
      c.run_id[k] = c.run_id[root];
    }
    c.sizes[c.run_id[k] - 1] += c.runs[k].x1 - c.runs[k].x0;
  }
  return c;
}

/// Per-voxel component ids: 0 background, 1..K foreground.
struct LabelMap {
  Grid grid;
  Connectivity connectivity = Connectivity::TwentySix;
  std::vector<std::uint32_t> labels;
  std::vector<std::size_t> sizes;  // sizes[id - 1]

  std::uint32_t count() const noexcept { return static_cast<std::uint32_t>(sizes.size()); }
  std::uint32_t at(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return labels[grid.dims.index(x, y, z)];
  }

  Volume3D<std::int32_t> to_volume() const {
    std::vector<std::int32_t> v(labels.begin(), labels.end());
    return Volume3D<std::int32_t>(grid, std::move(v));
  }
};

inline LabelMap to_label_map(const Components& c, const Grid& grid) {
  LabelMap lm;
  lm.grid = grid;
  lm.connectivity = c.connectivity;
  lm.labels.assign(c.dims.voxels(), 0);
  lm.sizes = c.sizes;
  const std::size_t rows = c.dims.ny * c.dims.nz;
  for (std::size_t r = 0; r < rows; ++r) {
    std::uint32_t* row = lm.labels.data() + r * c.dims.nx;
    for (std::size_t k = c.row_start[r]; k < c.row_start[r + 1]; ++k)
      std::fill(row + c.runs[k].x0, row + c.runs[k].x1, c.run_id[k]);
  }
  return lm;
}

inline LabelMap label_components(const BinaryMask& m, Connectivity conn = Connectivity::TwentySix) {
  return to_label_map(find_components(m, conn), m.grid());
}

struct ComponentSize {
  std::uint32_t id;
  std::size_t voxels;
  friend bool operator==(const ComponentSize&, const ComponentSize&) = default;
};

inline std::vector<ComponentSize> component_sizes(const LabelMap& lm) {
  std::vector<ComponentSize> out;
  out.reserve(lm.sizes.size());
  for (std::size_t i = 0; i < lm.sizes.size(); ++i)
    out.push_back({static_cast<std::uint32_t>(i + 1), lm.sizes[i]});
  return out;
}

/// [lo, hi) in voxels.
struct HistogramBin {
  std::size_t lo;
  std::size_t hi;
  std::size_t count;
  double density;
};

/// Cluster-size distribution normalized to unit total mass. Linear bins are
/// one voxel wide; log bins have edges at powers of two starting at 1. The
/// bin range spans the smallest to the largest observed size.
inline std::vector<HistogramBin> size_histogram(std::span<const std::size_t> sizes, bool log_binning) {
  if (sizes.empty()) throw Error(Errc::EmptyInput, "no cluster sizes to histogram");
  const auto [mn_it, mx_it] = std::minmax_element(sizes.begin(), sizes.end());
  const std::size_t mn = *mn_it, mx = *mx_it;
  if (mn == 0) throw Error(Errc::BadParameter, "cluster sizes must be positive");

  std::vector<HistogramBin> bins;
  if (log_binning) {
    std::size_t lo = 1;
    while (lo * 2 <= mn) lo *= 2;
    for (; lo <= mx; lo *= 2) bins.push_back({lo, lo * 2, 0, 0.0});
  } else {
    for (std::size_t s = mn; s <= mx; ++s) bins.push_back({s, s + 1, 0, 0.0});
  }
  for (const std::size_t s : sizes) {
    std::size_t b = 0;
    if (log_binning) {
      while (bins[b].hi <= s) ++b;
    } else {
      b = s - mn;
    }
    ++bins[b].count;
  }
  const double total = static_cast<double>(sizes.size());
  for (auto& b : bins) b.density = static_cast<double>(b.count) / total;
  return bins;
}

}  // namespace pvseval

#endif  // PVSEVAL_CCL_HPP
