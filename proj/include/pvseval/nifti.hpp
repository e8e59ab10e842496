#ifndef PVSEVAL_NIFTI_HPP
#define PVSEVAL_NIFTI_HPP

// Single-file NIfTI-1 reader/writer with transparent gzip support.
//
// Voxel data is always exposed x-fastest, exactly as stored on disk; the
// affine carries orientation. Only the "n+1" single-file layout is read:
// "ni1" headers parse but are refused by the volume readers, and NIfTI-2
// (sizeof_hdr == 540) is recognized and refused.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pvseval/error.hpp"
#include "pvseval/volume.hpp"

namespace pvseval::nifti {

enum class Endian { Little, Big };

enum class Datatype : std::int16_t {
  U8 = 2,
  I16 = 4,
  I32 = 8,
  F32 = 16,
  F64 = 64,
};

constexpr std::int32_t kHeaderSize = 348;
constexpr std::int32_t kNifti2HeaderSize = 540;
constexpr std::size_t kSingleFileOffset = 352;

inline bool is_supported_datatype(std::int16_t code) {
  switch (code) {
    case 2: case 4: case 8: case 16: case 64: return true;
    default: return false;
  }
}

constexpr int bits_of(Datatype t) {
  switch (t) {
    case Datatype::U8: return 8;
    case Datatype::I16: return 16;
    case Datatype::I32: return 32;
    case Datatype::F32: return 32;
    case Datatype::F64: return 64;
  }
  return 0;
}

inline Datatype datatype_from_name(std::string_view s) {
  if (s == "u8" || s == "uint8") return Datatype::U8;
  if (s == "i16" || s == "int16") return Datatype::I16;
  if (s == "i32" || s == "int32") return Datatype::I32;
  if (s == "f32" || s == "float32") return Datatype::F32;
  if (s == "f64" || s == "float64") return Datatype::F64;
  throw Error(Errc::UnsupportedDatatype, "unknown datatype name '" + std::string(s) + "'");
}

struct NiftiHeader {
  std::int32_t sizeof_hdr = kHeaderSize;
  std::array<std::int16_t, 8> dim{};
  Datatype datatype = Datatype::U8;
  std::int16_t bitpix = 8;
  std::array<float, 8> pixdim{};
  float vox_offset = static_cast<float>(kSingleFileOffset);
  float scl_slope = 1.0f;
  float scl_inter = 0.0f;
  std::uint8_t xyzt_units = 0;
  std::int16_t qform_code = 0;
  std::int16_t sform_code = 0;
  float quatern_b = 0, quatern_c = 0, quatern_d = 0;
  float qoffset_x = 0, qoffset_y = 0, qoffset_z = 0;
  std::array<float, 4> srow_x{}, srow_y{}, srow_z{};
  std::array<char, 80> descrip{};
  std::array<char, 4> magic{'n', '+', '1', '\0'};
  /// Byte order the header was decoded from (or will be encoded in).
  Endian endian = Endian::Little;

  bool single_file() const { return magic[1] == '+'; }

  Dims dims() const {
    return Dims{static_cast<std::size_t>(dim[1]), static_cast<std::size_t>(dim[2]),
                static_cast<std::size_t>(dim[3])};
  }
  Spacing spacing() const { return {pixdim[1], pixdim[2], pixdim[3]}; }
};

namespace detail {

inline bool host_is_little() { return std::endian::native == std::endian::little; }

template <typename T>
T load(std::span<const std::uint8_t> bytes, std::size_t off, bool swap) {
  std::array<std::uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), bytes.data() + off, sizeof(T));
  if (swap) std::reverse(raw.begin(), raw.end());
  T v;
  std::memcpy(&v, raw.data(), sizeof(T));
  return v;
}

template <typename T>
void store(std::span<std::uint8_t> bytes, std::size_t off, T v, bool swap) {
  std::array<std::uint8_t, sizeof(T)> raw;
  std::memcpy(raw.data(), &v, sizeof(T));
  if (swap) std::reverse(raw.begin(), raw.end());
  std::memcpy(bytes.data() + off, raw.data(), sizeof(T));
}

inline bool needs_swap(Endian e) { return (e == Endian::Little) != host_is_little(); }

// Field offsets in the 348-byte NIfTI-1 header.
namespace off {
constexpr std::size_t sizeof_hdr = 0;
constexpr std::size_t dim = 40;
constexpr std::size_t datatype = 70;
constexpr std::size_t bitpix = 72;
constexpr std::size_t pixdim = 76;
constexpr std::size_t vox_offset = 108;
constexpr std::size_t scl_slope = 112;
constexpr std::size_t scl_inter = 116;
constexpr std::size_t xyzt_units = 123;
constexpr std::size_t descrip = 148;
constexpr std::size_t qform_code = 252;
constexpr std::size_t sform_code = 254;
constexpr std::size_t quatern_b = 256;
constexpr std::size_t srow_x = 280;
constexpr std::size_t srow_y = 296;
constexpr std::size_t srow_z = 312;
constexpr std::size_t magic = 344;
}  // namespace off

}  // namespace detail

/// Decodes the fixed 348-byte header. Byte order is detected by checking
/// which interpretation of sizeof_hdr yields 348.
inline NiftiHeader parse_header(std::span<const std::uint8_t> bytes) {
  using namespace detail;
  if (bytes.size() < static_cast<std::size_t>(kHeaderSize))
    throw Error(Errc::TooShort, "need 348 header bytes, got " + std::to_string(bytes.size()));

  NiftiHeader h;
  const auto raw_le = load<std::int32_t>(bytes, off::sizeof_hdr, needs_swap(Endian::Little));
  const auto raw_be = load<std::int32_t>(bytes, off::sizeof_hdr, needs_swap(Endian::Big));
  if (raw_le == kHeaderSize) {
    h.endian = Endian::Little;
  } else if (raw_be == kHeaderSize) {
    h.endian = Endian::Big;
  } else if (raw_le == kNifti2HeaderSize || raw_be == kNifti2HeaderSize) {
    throw Error(Errc::UnsupportedFormat, "NIfTI-2 headers are not supported");
  } else {
    throw Error(Errc::BadHeaderSize, "sizeof_hdr is neither 348 little- nor big-endian");
  }
  const bool swap = needs_swap(h.endian);
  h.sizeof_hdr = kHeaderSize;

  std::memcpy(h.magic.data(), bytes.data() + off::magic, 4);
  const bool n1 = h.magic == std::array<char, 4>{'n', '+', '1', '\0'};
  const bool ni1 = h.magic == std::array<char, 4>{'n', 'i', '1', '\0'};
  if (!n1 && !ni1) throw Error(Errc::BadMagic, "magic is not \"n+1\" or \"ni1\"");

  for (std::size_t i = 0; i < 8; ++i) h.dim[i] = load<std::int16_t>(bytes, off::dim + 2 * i, swap);
  const auto code = load<std::int16_t>(bytes, off::datatype, swap);
  if (!is_supported_datatype(code))
    throw Error(Errc::UnsupportedDatatype, "datatype code " + std::to_string(code));
  h.datatype = static_cast<Datatype>(code);
  h.bitpix = load<std::int16_t>(bytes, off::bitpix, swap);
  if (h.bitpix != bits_of(h.datatype))
    throw Error(Errc::InconsistentBitpix, "bitpix " + std::to_string(h.bitpix) + " for datatype " +
                                              std::to_string(code));
  for (std::size_t i = 0; i < 8; ++i) h.pixdim[i] = load<float>(bytes, off::pixdim + 4 * i, swap);
  h.vox_offset = load<float>(bytes, off::vox_offset, swap);
  h.scl_slope = load<float>(bytes, off::scl_slope, swap);
  h.scl_inter = load<float>(bytes, off::scl_inter, swap);
  h.xyzt_units = bytes[off::xyzt_units];
  std::memcpy(h.descrip.data(), bytes.data() + off::descrip, h.descrip.size());
  h.qform_code = load<std::int16_t>(bytes, off::qform_code, swap);
  h.sform_code = load<std::int16_t>(bytes, off::sform_code, swap);
  h.quatern_b = load<float>(bytes, off::quatern_b, swap);
  h.quatern_c = load<float>(bytes, off::quatern_b + 4, swap);
  h.quatern_d = load<float>(bytes, off::quatern_b + 8, swap);
  h.qoffset_x = load<float>(bytes, off::quatern_b + 12, swap);
  h.qoffset_y = load<float>(bytes, off::quatern_b + 16, swap);
  h.qoffset_z = load<float>(bytes, off::quatern_b + 20, swap);
  for (std::size_t i = 0; i < 4; ++i) {
    h.srow_x[i] = load<float>(bytes, off::srow_x + 4 * i, swap);
    h.srow_y[i] = load<float>(bytes, off::srow_y + 4 * i, swap);
    h.srow_z[i] = load<float>(bytes, off::srow_z + 4 * i, swap);
  }
  return h;
}

/// Inverse of parse_header, in the byte order recorded in `h.endian`.
inline std::array<std::uint8_t, kHeaderSize> encode_header(const NiftiHeader& h) {
  using namespace detail;
  std::array<std::uint8_t, kHeaderSize> out{};
  std::span<std::uint8_t> b(out);
  const bool swap = needs_swap(h.endian);
  store<std::int32_t>(b, off::sizeof_hdr, kHeaderSize, swap);
  out[38] = 'r';  // "regular", kept for ANALYZE compatibility
  for (std::size_t i = 0; i < 8; ++i) store<std::int16_t>(b, off::dim + 2 * i, h.dim[i], swap);
  store<std::int16_t>(b, off::datatype, static_cast<std::int16_t>(h.datatype), swap);
  store<std::int16_t>(b, off::bitpix, h.bitpix, swap);
  for (std::size_t i = 0; i < 8; ++i) store<float>(b, off::pixdim + 4 * i, h.pixdim[i], swap);
  store<float>(b, off::vox_offset, h.vox_offset, swap);
  store<float>(b, off::scl_slope, h.scl_slope, swap);
  store<float>(b, off::scl_inter, h.scl_inter, swap);
  out[off::xyzt_units] = h.xyzt_units;
  std::memcpy(out.data() + off::descrip, h.descrip.data(), h.descrip.size());
  store<std::int16_t>(b, off::qform_code, h.qform_code, swap);
  store<std::int16_t>(b, off::sform_code, h.sform_code, swap);
  const std::array<float, 6> q{h.quatern_b, h.quatern_c, h.quatern_d,
                               h.qoffset_x, h.qoffset_y, h.qoffset_z};
  for (std::size_t i = 0; i < 6; ++i) store<float>(b, off::quatern_b + 4 * i, q[i], swap);
  for (std::size_t i = 0; i < 4; ++i) {
    store<float>(b, off::srow_x + 4 * i, h.srow_x[i], swap);
    store<float>(b, off::srow_y + 4 * i, h.srow_y[i], swap);
    store<float>(b, off::srow_z + 4 * i, h.srow_z[i], swap);
  }
  std::memcpy(out.data() + off::magic, h.magic.data(), 4);
  return out;
}

/// sform when sform_code > 0, else the quaternion transform when
/// qform_code > 0, else a diagonal of the voxel spacing.
inline Affine header_affine(const NiftiHeader& h) {
  Affine a{};
  if (h.sform_code > 0) {
    for (std::size_t c = 0; c < 4; ++c) {
      a[0][c] = h.srow_x[c];
      a[1][c] = h.srow_y[c];
      a[2][c] = h.srow_z[c];
    }
    return a;
  }
  const Spacing s = h.spacing();
  if (h.qform_code > 0) {
    const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    const double aa = std::sqrt(std::max(0.0, 1.0 - (b * b + c * c + d * d)));
    const double qfac = h.pixdim[0] < 0 ? -1.0 : 1.0;
    const double r[3][3] = {
        {aa * aa + b * b - c * c - d * d, 2 * (b * c - aa * d), 2 * (b * d + aa * c)},
        {2 * (b * c + aa * d), aa * aa + c * c - b * b - d * d, 2 * (c * d - aa * b)},
        {2 * (b * d - aa * c), 2 * (c * d + aa * b), aa * aa + d * d - c * c - b * b}};
    const double scale[3] = {s[0], s[1], qfac * s[2]};
    for (std::size_t row = 0; row < 3; ++row)
      for (std::size_t col = 0; col < 3; ++col) a[row][col] = r[row][col] * scale[col];
    a[0][3] = h.qoffset_x;
    a[1][3] = h.qoffset_y;
    a[2][3] = h.qoffset_z;
    return a;
  }
  return diagonal_affine(s);
}

// ---------------------------------------------------------------------------
// gzip container

inline bool is_gzip(std::span<const std::uint8_t> bytes) {
  return bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b;
}

inline std::vector<std::uint8_t> gunzip(std::span<const std::uint8_t> in) {
  std::vector<std::uint8_t> out;
  if (in.size() >= 4) {
    // ISIZE trailer: uncompressed size mod 2^32 of the last member.
    std::uint32_t isize = 0;
    for (int i = 3; i >= 0; --i) isize = (isize << 8) | in[in.size() - 4 + static_cast<std::size_t>(i)];
    out.reserve(isize);
  }
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error(Errc::IoFailure, "inflateInit2 failed");
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  std::array<std::uint8_t, 1 << 16> chunk;
  int rc = Z_OK;
  for (;;) {
    zs.next_out = chunk.data();
    zs.avail_out = static_cast<uInt>(chunk.size());
    rc = inflate(&zs, Z_NO_FLUSH);
    out.insert(out.end(), chunk.data(), chunk.data() + (chunk.size() - zs.avail_out));
    if (rc == Z_STREAM_END) {
      // concatenated members
      if (zs.avail_in > 0 && is_gzip({zs.next_in, zs.avail_in})) {
        inflateReset(&zs);
        continue;
      }
      break;
    }
    if (rc != Z_OK) {
      inflateEnd(&zs);
      throw Error(Errc::TruncatedData, "corrupt or truncated gzip stream");
    }
    if (zs.avail_in == 0 && zs.avail_out != 0) {
      inflateEnd(&zs);
      throw Error(Errc::TruncatedData, "gzip stream ended early");
    }
  }
  inflateEnd(&zs);
  return out;
}

/// Deterministic gzip (mtime 0, no file name).
inline std::vector<std::uint8_t> gzip(std::span<const std::uint8_t> in, int level = 6) {
  z_stream zs{};
  if (deflateInit2(&zs, level, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) != Z_OK)
    throw Error(Errc::IoFailure, "deflateInit2 failed");
  std::vector<std::uint8_t> out(deflateBound(&zs, static_cast<uLong>(in.size())) + 32);
  zs.next_in = const_cast<Bytef*>(in.data());
  zs.avail_in = static_cast<uInt>(in.size());
  zs.next_out = out.data();
  zs.avail_out = static_cast<uInt>(out.size());
  const int rc = deflate(&zs, Z_FINISH);
  deflateEnd(&zs);
  if (rc != Z_STREAM_END) throw Error(Errc::IoFailure, "deflate failed");
  out.resize(zs.total_out);
  return out;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoFailure, "cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (f.bad()) throw Error(Errc::IoFailure, "read error on '" + path.string() + "'");
  return bytes;
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(Errc::IoFailure, "cannot create '" + path.string() + "'");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(Errc::IoFailure, "write error on '" + path.string() + "'");
}

// ---------------------------------------------------------------------------
// decoding

enum class ReadMode {
  Mask,       ///< stored value != 0, scaling ignored
  Intensity,  ///< stored * scl_slope + scl_inter (slope 0 means 1)
};

/// A decoded file: header plus raw access to the voxel payload.
class NiftiFile {
 public:
  explicit NiftiFile(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {
    if (is_gzip(bytes_)) bytes_ = gunzip(bytes_);
    header_ = parse_header(bytes_);
    if (!header_.single_file())
      throw Error(Errc::UnsupportedFormat, "dual-file (.hdr/.img) NIfTI is not supported");
    const auto& d = header_.dim;
    const bool rank_ok = d[0] == 3 || (d[0] == 4 && d[4] == 1);
    if (!rank_ok)
      throw Error(Errc::UnsupportedDimensionality,
                  "expected a 3D volume, dim[0]=" + std::to_string(d[0]));
    if (d[1] < 1 || d[2] < 1 || d[3] < 1)
      throw Error(Errc::UnsupportedDimensionality, "grid extents must be positive");
    if (!(header_.vox_offset >= static_cast<float>(kSingleFileOffset)))
      throw Error(Errc::BadHeaderSize, "vox_offset below 352 in a single-file volume");
    for (int i = 1; i <= 3; ++i)
      if (!(header_.pixdim[static_cast<std::size_t>(i)] > 0))
        throw Error(Errc::BadParameter, "pixdim[" + std::to_string(i) + "] must be positive");
    offset_ = static_cast<std::size_t>(header_.vox_offset);
    const std::size_t need = offset_ + header_.dims().voxels() * (header_.bitpix / 8);
    if (bytes_.size() < need)
      throw Error(Errc::TruncatedData, "file holds " + std::to_string(bytes_.size()) +
                                           " bytes, voxel data requires " + std::to_string(need));
  }

  static NiftiFile open(const std::filesystem::path& path) { return NiftiFile(read_file(path)); }

  const NiftiHeader& header() const { return header_; }

  Grid grid() const { return Grid{header_.dims(), header_.spacing(), header_affine(header_)}; }

  /// Calls `fn(index, stored_value_as_double)` for every voxel in file order.
  template <typename Fn>
  void for_each_stored(Fn&& fn) const {
    switch (header_.datatype) {
      case Datatype::U8: visit<std::uint8_t>(fn); break;
      case Datatype::I16: visit<std::int16_t>(fn); break;
      case Datatype::I32: visit<std::int32_t>(fn); break;
      case Datatype::F32: visit<float>(fn); break;
      case Datatype::F64: visit<double>(fn); break;
    }
  }

  Volume3D<double> volume(ReadMode mode) const {
    Volume3D<double> v(grid());
    auto out = v.data();
    if (mode == ReadMode::Mask) {
      for_each_stored([&](std::size_t i, auto s) { out[i] = s != 0 ? 1.0 : 0.0; });
    } else {
      const double slope = header_.scl_slope == 0.0f || !std::isfinite(header_.scl_slope)
                               ? 1.0
                               : static_cast<double>(header_.scl_slope);
      const double inter =
          std::isfinite(header_.scl_inter) ? static_cast<double>(header_.scl_inter) : 0.0;
      for_each_stored([&](std::size_t i, auto s) { out[i] = static_cast<double>(s) * slope + inter; });
    }
    return v;
  }

  BinaryMask mask() const {
    std::vector<std::uint8_t> bits(header_.dims().voxels());
    for_each_stored([&](std::size_t i, auto s) { bits[i] = s != 0 ? 1 : 0; });
    return BinaryMask(grid(), std::move(bits));
  }

 private:
  template <typename T, typename Fn>
  void visit(Fn& fn) const {
    const std::size_t n = header_.dims().voxels();
    const std::uint8_t* p = bytes_.data() + offset_;
    const bool swap = detail::needs_swap(header_.endian);
    if constexpr (sizeof(T) == 1) {
      for (std::size_t i = 0; i < n; ++i) fn(i, static_cast<T>(p[i]));
    } else {
      std::span<const std::uint8_t> all(bytes_);
      for (std::size_t i = 0; i < n; ++i) fn(i, detail::load<T>(all, offset_ + i * sizeof(T), swap));
    }
  }

  std::vector<std::uint8_t> bytes_;
  NiftiHeader header_;
  std::size_t offset_ = kSingleFileOffset;
};

inline NiftiHeader read_header(const std::filesystem::path& path) {
  return NiftiFile::open(path).header();
}

inline Volume3D<double> read_volume(const std::filesystem::path& path, ReadMode mode) {
  return NiftiFile::open(path).volume(mode);
}

inline BinaryMask read_mask(const std::filesystem::path& path) { return NiftiFile::open(path).mask(); }

// ---------------------------------------------------------------------------
// encoding

struct WriteOptions {
  Datatype datatype = Datatype::F32;
  bool gzip = false;
  Endian endian = Endian::Little;
};

inline NiftiHeader make_header(const Grid& g, Datatype t, Endian e = Endian::Little) {
  NiftiHeader h;
  h.endian = e;
  h.dim = {3,
           static_cast<std::int16_t>(g.dims.nx),
           static_cast<std::int16_t>(g.dims.ny),
           static_cast<std::int16_t>(g.dims.nz),
           1, 1, 1, 1};
  h.datatype = t;
  h.bitpix = static_cast<std::int16_t>(bits_of(t));
  h.pixdim = {1.0f,
              static_cast<float>(g.spacing[0]),
              static_cast<float>(g.spacing[1]),
              static_cast<float>(g.spacing[2]),
              0.0f, 0.0f, 0.0f, 0.0f};
  h.vox_offset = static_cast<float>(kSingleFileOffset);
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // mm
  h.sform_code = 1;
  for (std::size_t c = 0; c < 4; ++c) {
    h.srow_x[c] = static_cast<float>(g.affine[0][c]);
    h.srow_y[c] = static_cast<float>(g.affine[1][c]);
    h.srow_z[c] = static_cast<float>(g.affine[2][c]);
  }
  constexpr char tag[] = "pvseval";
  std::memcpy(h.descrip.data(), tag, sizeof(tag));
  return h;
}

namespace detail {

template <typename T>
bool representable(double v) {
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(v)) return true;
    return std::abs(v) <= static_cast<double>(std::numeric_limits<T>::max());
  } else {
    return std::isfinite(v) && v == std::trunc(v) &&
           v >= static_cast<double>(std::numeric_limits<T>::min()) &&
           v <= static_cast<double>(std::numeric_limits<T>::max());
  }
}

template <typename T, typename Src>
void encode_payload(std::span<const Src> src, std::span<std::uint8_t> dst, bool swap) {
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v = static_cast<double>(src[i]);
    if (!representable<T>(v))
      throw Error(Errc::RangeOverflow, "value " + std::to_string(v) + " at voxel " +
                                           std::to_string(i) + " does not fit the target datatype");
    store<T>(dst, i * sizeof(T), static_cast<T>(src[i]), swap);
  }
}

}  // namespace detail

/// Serializes a volume to single-file NIfTI-1 bytes (uncompressed).
template <typename T>
std::vector<std::uint8_t> encode_volume(const Grid& g, std::span<const T> data, const WriteOptions& opt) {
  if (g.dims.nx > 32767 || g.dims.ny > 32767 || g.dims.nz > 32767)
    throw Error(Errc::RangeOverflow, "grid " + g.dims.str() + " exceeds NIfTI-1 extents");
  const NiftiHeader h = make_header(g, opt.datatype, opt.endian);
  const std::size_t width = static_cast<std::size_t>(h.bitpix / 8);
  std::vector<std::uint8_t> out(kSingleFileOffset + data.size() * width, 0);
  const auto hdr = encode_header(h);
  std::copy(hdr.begin(), hdr.end(), out.begin());
  // bytes 348..351 stay zero: no header extensions
  std::span<std::uint8_t> payload(out.data() + kSingleFileOffset, data.size() * width);
  const bool swap = detail::needs_swap(opt.endian);
  switch (opt.datatype) {
    case Datatype::U8: detail::encode_payload<std::uint8_t>(data, payload, swap); break;
    case Datatype::I16: detail::encode_payload<std::int16_t>(data, payload, swap); break;
    case Datatype::I32: detail::encode_payload<std::int32_t>(data, payload, swap); break;
    case Datatype::F32: detail::encode_payload<float>(data, payload, swap); break;
    case Datatype::F64: detail::encode_payload<double>(data, payload, swap); break;
  }
  return out;
}

template <typename T>
void write_volume(const Volume3D<T>& vol, const std::filesystem::path& path, const WriteOptions& opt) {
  auto bytes = encode_volume<T>(vol.grid(), vol.data(), opt);
  if (opt.gzip) bytes = gzip(bytes);
  write_file(path, bytes);
}

/// Masks are written as u8 0/1.
inline void write_mask(const BinaryMask& m, const std::filesystem::path& path, bool compress,
                       Endian endian = Endian::Little) {
  auto bytes = encode_volume<std::uint8_t>(m.grid(), m.data(), {Datatype::U8, false, endian});
  if (compress) bytes = gzip(bytes);
  write_file(path, bytes);
}

}  // namespace pvseval::nifti

#endif  // PVSEVAL_NIFTI_HPP
