#ifndef PVSEVAL_VOLUME_HPP
#define PVSEVAL_VOLUME_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pvseval/error.hpp"

namespace pvseval {

struct Dims {
  std::size_t nx = 0, ny = 0, nz = 0;

  constexpr std::size_t voxels() const noexcept { return nx * ny * nz; }
  constexpr std::size_t index(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return x + nx * (y + ny * z);
  }
  friend constexpr bool operator==(const Dims&, const Dims&) = default;

  std::string str() const {
    return std::to_string(nx) + "x" + std::to_string(ny) + "x" + std::to_string(nz);
  }
};

using Spacing = std::array<double, 3>;

/// Rows of the voxel-to-world transform (3x4, world = A * [i j k 1]).
using Affine = std::array<std::array<double, 4>, 3>;

inline Affine diagonal_affine(const Spacing& s) {
  Affine a{};
  for (std::size_t r = 0; r < 3; ++r) a[r][r] = s[r];
  return a;
}

/// Geometry shared by every volume on one evaluation grid.
struct Grid {
  Dims dims;
  Spacing spacing{1.0, 1.0, 1.0};
  Affine affine = diagonal_affine({1.0, 1.0, 1.0});

  static Grid make(Dims d, Spacing s = {1.0, 1.0, 1.0}) {
    if (s[0] <= 0 || s[1] <= 0 || s[2] <= 0)
      throw Error(Errc::BadParameter, "voxel spacing must be positive");
    return Grid{d, s, diagonal_affine(s)};
  }

  double voxel_volume_mm3() const { return spacing[0] * spacing[1] * spacing[2]; }
};

inline bool affines_close(const Affine& a, const Affine& b, double tol = 1e-4) {
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 4; ++c)
      if (std::abs(a[r][c] - b[r][c]) > tol) return false;
  return true;
}

/// Throws DimMismatch naming both grids. Strict mode also compares affines.
inline void require_same_grid(const Grid& a, const Grid& b, std::string_view what_a = "a",
                              std::string_view what_b = "b", bool strict = false) {
  if (a.dims != b.dims) {
    throw Error(Errc::DimMismatch, std::string(what_a) + " grid " + a.dims.str() + " differs from " +
                                       std::string(what_b) + " grid " + b.dims.str());
  }
  if (strict && !affines_close(a.affine, b.affine)) {
    throw Error(Errc::DimMismatch, std::string(what_a) + " and " + std::string(what_b) +
                                       " share dims " + a.dims.str() + " but their affines differ");
  }
}

/// Dense scalar grid, x fastest in memory.
template <typename T>
class Volume3D {
 public:
  Volume3D() = default;
  explicit Volume3D(Grid g, T fill = T{}) : grid_(std::move(g)), data_(grid_.dims.voxels(), fill) {
    check_grid();
  }
  Volume3D(Grid g, std::vector<T> data) : grid_(std::move(g)), data_(std::move(data)) {
    check_grid();
    if (data_.size() != grid_.dims.voxels())
      throw Error(Errc::LengthMismatch, "volume data length " + std::to_string(data_.size()) +
                                            " does not match grid " + grid_.dims.str());
  }

  const Grid& grid() const noexcept { return grid_; }
  const Dims& dims() const noexcept { return grid_.dims; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator[](std::size_t i) noexcept { return data_[i]; }
  const T& operator[](std::size_t i) const noexcept { return data_[i]; }
  T& at(std::size_t x, std::size_t y, std::size_t z) noexcept { return data_[grid_.dims.index(x, y, z)]; }
  const T& at(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return data_[grid_.dims.index(x, y, z)];
  }

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }

 private:
  void check_grid() const {
    const auto& s = grid_.spacing;
    if (s[0] <= 0 || s[1] <= 0 || s[2] <= 0)
      throw Error(Errc::BadParameter, "voxel spacing must be positive");
  }

  Grid grid_;
  std::vector<T> data_;
};

/// Foreground/background voxels with a cached foreground count.
class BinaryMask {
 public:
  BinaryMask() = default;
  explicit BinaryMask(Grid g) : grid_(std::move(g)), data_(grid_.dims.voxels(), 0) {}

  /// Any nonzero byte is foreground; storage is normalized to 0/1.
  BinaryMask(Grid g, std::vector<std::uint8_t> data) : grid_(std::move(g)), data_(std::move(data)) {
    if (data_.size() != grid_.dims.voxels())
      throw Error(Errc::LengthMismatch, "mask data length " + std::to_string(data_.size()) +
                                            " does not match grid " + grid_.dims.str());
    std::size_t n = 0;
    for (auto& v : data_) {
      v = v != 0;
      n += v;
    }
    count_ = n;
  }

  template <typename T>
  static BinaryMask from_volume(const Volume3D<T>& v) {
    std::vector<std::uint8_t> bits(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) bits[i] = v[i] != T{} ? 1 : 0;
    return BinaryMask(v.grid(), std::move(bits));
  }

  const Grid& grid() const noexcept { return grid_; }
  const Dims& dims() const noexcept { return grid_.dims; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t count() const noexcept { return count_; }
  bool empty() const noexcept { return count_ == 0; }

  bool test(std::size_t i) const noexcept { return data_[i] != 0; }
  bool test(std::size_t x, std::size_t y, std::size_t z) const noexcept {
    return data_[grid_.dims.index(x, y, z)] != 0;
  }

  void set(std::size_t i, bool on = true) noexcept {
    const std::uint8_t v = on ? 1 : 0;
    if (data_[i] != v) {
      if (on) ++count_;
      else --count_;
      data_[i] = v;
    }
  }
  void set(std::size_t x, std::size_t y, std::size_t z, bool on = true) noexcept {
    set(grid_.dims.index(x, y, z), on);
  }

  /// 0/1 bytes, x fastest.
  std::span<const std::uint8_t> data() const noexcept { return data_; }

  friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
    return a.grid_.dims == b.grid_.dims && a.data_ == b.data_;
  }

 private:
  Grid grid_;
  std::vector<std::uint8_t> data_;
  std::size_t count_ = 0;
};

enum class Region { WM, BG, Other };

inline std::string region_name(Region r) {
  switch (r) {
    case Region::WM: return "WM";
    case Region::BG: return "BG";
    case Region::Other: return "other";
  }
  return "other";
}

/// An anatomical region restricting evaluation. `name` is what appears in
/// reports; `region` classifies it.
struct RoiMask {
  Region region = Region::Other;
  std::string name;
  BinaryMask mask;

  static RoiMask make(Region r, BinaryMask m) { return RoiMask{r, region_name(r), std::move(m)}; }
};

namespace detail {
template <typename Op>
BinaryMask combine(const BinaryMask& a, const BinaryMask& b, Op op) {
  require_same_grid(a.grid(), b.grid());
  auto da = a.data();
  auto db = b.data();
  std::vector<std::uint8_t> out(da.size());
  for (std::size_t i = 0; i < da.size(); ++i) out[i] = op(da[i], db[i]);
  return BinaryMask(a.grid(), std::move(out));
}
}  // namespace detail

/// Voxelwise AND; geometry comes from `a`.
inline BinaryMask intersect(const BinaryMask& a, const BinaryMask& b) {
  return detail::combine(a, b, [](std::uint8_t x, std::uint8_t y) -> std::uint8_t { return x & y; });
}

/// Voxels in `a` and not in `b`.
inline BinaryMask subtract(const BinaryMask& a, const BinaryMask& b) {
  return detail::combine(a, b, [](std::uint8_t x, std::uint8_t y) -> std::uint8_t { return x & (y ^ 1); });
}

inline BinaryMask unite(const BinaryMask& a, const BinaryMask& b) {
  return detail::combine(a, b, [](std::uint8_t x, std::uint8_t y) -> std::uint8_t { return x | y; });
}

/// Number of foreground voxels in both masks, without materializing the
/// intersection.
inline std::size_t overlap_count(const BinaryMask& a, const BinaryMask& b) {
  require_same_grid(a.grid(), b.grid());
  auto da = a.data();
  auto db = b.data();
  std::size_t n = 0;
  for (std::size_t i = 0; i < da.size(); ++i) n += da[i] & db[i];
  return n;
}

enum class VolumeUnits { Voxels, Mm3 };

inline double foreground_volume(const BinaryMask& m, VolumeUnits units = VolumeUnits::Voxels) {
  const double n = static_cast<double>(m.count());
  return units == VolumeUnits::Voxels ? n : n * m.grid().voxel_volume_mm3();
}

}  // namespace pvseval

#endif  // PVSEVAL_VOLUME_HPP
