// NIfTI-1 single-file reader/writer (.nii, .nii.gz).
//
// Scope: datatypes uint8/int16/int32/float32, both byte orders on read,
// little-endian write, 2D/3D spatial grids plus an optional channel axis in
// dim[5]. Affines must be axis-aligned permutations/flips of RAS within 1e-3
// in the direction cosines; volumes are reoriented to canonical RAS on load
// and oblique files are rejected (resampling semantics here are axis-aligned).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include <zlib.h>

#include "format_detail.hpp"
#include "segaudit/error.hpp"
#include "segaudit/version.hpp"

namespace segaudit::detail {

namespace {

// Public NIfTI-1 header layout, 348 bytes.
struct Nifti1Header {
  std::int32_t sizeof_hdr;
  char data_type[10];
  char db_name[18];
  std::int32_t extents;
  std::int16_t session_error;
  char regular;
  char dim_info;
  std::int16_t dim[8];
  float intent_p1;
  float intent_p2;
  float intent_p3;
  std::int16_t intent_code;
  std::int16_t datatype;
  std::int16_t bitpix;
  std::int16_t slice_start;
  float pixdim[8];
  float vox_offset;
  float scl_slope;
  float scl_inter;
  std::int16_t slice_end;
  char slice_code;
  char xyzt_units;
  float cal_max;
  float cal_min;
  float slice_duration;
  float toffset;
  std::int32_t glmax;
  std::int32_t glmin;
  char descrip[80];
  char aux_file[24];
  std::int16_t qform_code;
  std::int16_t sform_code;
  float quatern_b;
  float quatern_c;
  float quatern_d;
  float qoffset_x;
  float qoffset_y;
  float qoffset_z;
  float srow_x[4];
  float srow_y[4];
  float srow_z[4];
  char intent_name[16];
  char magic[4];
};

static_assert(sizeof(Nifti1Header) == 348);
static_assert(offsetof(Nifti1Header, dim) == 40);
static_assert(offsetof(Nifti1Header, datatype) == 70);
static_assert(offsetof(Nifti1Header, pixdim) == 76);
static_assert(offsetof(Nifti1Header, vox_offset) == 108);
static_assert(offsetof(Nifti1Header, scl_slope) == 112);
static_assert(offsetof(Nifti1Header, qform_code) == 252);
static_assert(offsetof(Nifti1Header, srow_x) == 280);
static_assert(offsetof(Nifti1Header, magic) == 344);

constexpr std::int16_t kDtUint8 = 2;
constexpr std::int16_t kDtInt16 = 4;
constexpr std::int16_t kDtInt32 = 8;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kIntentVector = 1007;

ScalarType scalar_from_nifti(std::int16_t dt) {
  switch (dt) {
    case kDtUint8: return ScalarType::uint8;
    case kDtInt16: return ScalarType::int16;
    case kDtInt32: return ScalarType::int32;
    case kDtFloat32: return ScalarType::float32;
    default:
      throw io_error("nifti: unsupported datatype code " + std::to_string(dt));
  }
}

std::int16_t nifti_from_scalar(ScalarType t) {
  switch (t) {
    case ScalarType::uint8: return kDtUint8;
    case ScalarType::int16: return kDtInt16;
    case ScalarType::int32: return kDtInt32;
    case ScalarType::float32: return kDtFloat32;
    default:
      throw validation_error("nifti: dtype not supported by the format");
  }
}

void swap_header(Nifti1Header& h) {
  h.sizeof_hdr = byteswap_value(h.sizeof_hdr);
  h.extents = byteswap_value(h.extents);
  h.session_error = byteswap_value(h.session_error);
  for (auto& d : h.dim) d = byteswap_value(d);
  h.intent_p1 = byteswap_value(h.intent_p1);
  h.intent_p2 = byteswap_value(h.intent_p2);
  h.intent_p3 = byteswap_value(h.intent_p3);
  h.intent_code = byteswap_value(h.intent_code);
  h.datatype = byteswap_value(h.datatype);
  h.bitpix = byteswap_value(h.bitpix);
  h.slice_start = byteswap_value(h.slice_start);
  for (auto& p : h.pixdim) p = byteswap_value(p);
  h.vox_offset = byteswap_value(h.vox_offset);
  h.scl_slope = byteswap_value(h.scl_slope);
  h.scl_inter = byteswap_value(h.scl_inter);
  h.slice_end = byteswap_value(h.slice_end);
  h.cal_max = byteswap_value(h.cal_max);
  h.cal_min = byteswap_value(h.cal_min);
  h.slice_duration = byteswap_value(h.slice_duration);
  h.toffset = byteswap_value(h.toffset);
  h.glmax = byteswap_value(h.glmax);
  h.glmin = byteswap_value(h.glmin);
  h.qform_code = byteswap_value(h.qform_code);
  h.sform_code = byteswap_value(h.sform_code);
  h.quatern_b = byteswap_value(h.quatern_b);
  h.quatern_c = byteswap_value(h.quatern_c);
  h.quatern_d = byteswap_value(h.quatern_d);
  h.qoffset_x = byteswap_value(h.qoffset_x);
  h.qoffset_y = byteswap_value(h.qoffset_y);
  h.qoffset_z = byteswap_value(h.qoffset_z);
  for (auto& v : h.srow_x) v = byteswap_value(v);
  for (auto& v : h.srow_y) v = byteswap_value(v);
  for (auto& v : h.srow_z) v = byteswap_value(v);
}

std::vector<unsigned char> read_entire_file(const std::filesystem::path& path) {
  // gzread is transparent for uncompressed files, so one path covers both.
  gzFile f = gzopen(path.string().c_str(), "rb");
  if (!f) throw io_error("cannot open file: " + path.string());
  std::vector<unsigned char> out;
  unsigned char chunk[1 << 16];
  int n = 0;
  while ((n = gzread(f, chunk, sizeof(chunk))) > 0) {
    out.insert(out.end(), chunk, chunk + n);
  }
  const bool failed = n < 0;
  gzclose(f);
  if (failed) throw io_error("failed to read file: " + path.string());
  return out;
}

struct AxisMapping {
  // For file axis a: world axis world_of[a] in {0,1,2} and a flip flag.
  std::array<int, 3> world_of{0, 1, 2};
  std::array<bool, 3> flip{false, false, false};
};

constexpr double kObliqueTol = 1e-3;

/// Direction columns (unit vectors, file axis -> world) to an axis mapping.
/// Throws io_error when any column is oblique or the mapping is degenerate.
AxisMapping direction_to_mapping(const std::array<std::array<double, 3>, 3>& cols,
                                 const std::filesystem::path& path) {
  AxisMapping map;
  std::array<bool, 3> used{false, false, false};
  for (int a = 0; a < 3; ++a) {
    int w = 0;
    double best = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(cols[a][i]) > best) {
        best = std::abs(cols[a][i]);
        w = i;
      }
    }
    if (std::abs(best - 1.0) > kObliqueTol) {
      throw io_error("nifti: oblique orientation (direction cosines beyond "
                     "tolerance) in " + path.string());
    }
    for (int i = 0; i < 3; ++i) {
      if (i != w && std::abs(cols[a][i]) > kObliqueTol) {
        throw io_error("nifti: oblique orientation (direction cosines beyond "
                       "tolerance) in " + path.string());
      }
    }
    if (used[w]) {
      throw io_error("nifti: degenerate orientation (axis used twice) in " +
                     path.string());
    }
    used[w] = true;
    map.world_of[a] = w;
    map.flip[a] = cols[a][w] < 0.0;
  }
  return map;
}

}  // namespace

RawVolume nifti_load(const std::filesystem::path& path, bool as_labels) {
  const auto bytes = read_entire_file(path);
  if (bytes.size() < sizeof(Nifti1Header)) {
    throw io_error("nifti: file shorter than a NIfTI-1 header: " + path.string());
  }
  Nifti1Header h{};
  std::memcpy(&h, bytes.data(), sizeof(h));

  bool swapped = false;
  if (h.sizeof_hdr != 348) {
    swap_header(h);
    swapped = true;
    if (h.sizeof_hdr != 348) {
      throw io_error("nifti: malformed header (sizeof_hdr) in " + path.string());
    }
  }
  if (std::memcmp(h.magic, "n+1", 4) != 0) {
    if (std::memcmp(h.magic, "ni1", 4) == 0) {
      throw io_error("nifti: two-file (.hdr/.img) pairs are not supported: " +
                     path.string());
    }
    throw io_error("nifti: malformed header (magic) in " + path.string());
  }

  const int hdr_ndim = h.dim[0];
  if (hdr_ndim < 2 || hdr_ndim > 5) {
    throw io_error("nifti: unsupported dimensionality dim[0]=" +
                   std::to_string(hdr_ndim) + " in " + path.string());
  }
  const int spatial_ndim = hdr_ndim == 2 ? 2 : 3;
  if (hdr_ndim >= 4 && h.dim[4] > 1) {
    throw io_error("nifti: time series are not supported: " + path.string());
  }
  int channels = 1;
  if (hdr_ndim == 5) {
    channels = h.dim[5];
    if (channels < 1) {
      throw io_error("nifti: malformed header (dim[5]) in " + path.string());
    }
  }

  std::array<std::int64_t, 3> file_dims{1, 1, 1};
  std::array<double, 3> file_sizes{1.0, 1.0, 1.0};
  for (int a = 0; a < spatial_ndim; ++a) {
    file_dims[a] = h.dim[a + 1];
    file_sizes[a] = h.pixdim[a + 1];
    if (file_dims[a] < 1) {
      throw io_error("nifti: malformed header (dim) in " + path.string());
    }
    if (!(file_sizes[a] > 0.0) || !std::isfinite(file_sizes[a])) {
      throw io_error("nifti: malformed header (non-positive pixdim) in " +
                     path.string());
    }
  }

  // Direction columns per file axis. sform wins, then qform, else identity.
  std::array<std::array<double, 3>, 3> cols{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};
  if (h.sform_code > 0) {
    const float* rows[3] = {h.srow_x, h.srow_y, h.srow_z};
    for (int a = 0; a < 3; ++a) {
      double norm = 0.0;
      for (int i = 0; i < 3; ++i) norm += static_cast<double>(rows[i][a]) * rows[i][a];
      norm = std::sqrt(norm);
      if (norm == 0.0) {
        if (a < spatial_ndim) {
          throw io_error("nifti: malformed sform (zero column) in " + path.string());
        }
        continue;  // unused trailing axis of a 2D file
      }
      for (int i = 0; i < 3; ++i) cols[a][i] = rows[i][a] / norm;
      if (a < spatial_ndim) file_sizes[a] = norm;
    }
  } else if (h.qform_code > 0) {
    const double b = h.quatern_b, c = h.quatern_c, d = h.quatern_d;
    const double a2 = 1.0 - (b * b + c * c + d * d);
    const double a = a2 > 0.0 ? std::sqrt(a2) : 0.0;
    const double qfac = h.pixdim[0] < 0.0f ? -1.0 : 1.0;
    const double r[3][3] = {
        {a * a + b * b - c * c - d * d, 2 * (b * c - a * d), 2 * (b * d + a * c)},
        {2 * (b * c + a * d), a * a + c * c - b * b - d * d, 2 * (c * d - a * b)},
        {2 * (b * d - a * c), 2 * (c * d + a * b), a * a + d * d - b * b - c * c}};
    for (int col = 0; col < 3; ++col) {
      const double f = col == 2 ? qfac : 1.0;
      for (int i = 0; i < 3; ++i) cols[col][i] = r[i][col] * f;
    }
  }
  const AxisMapping map = direction_to_mapping(cols, path);

  // Payload.
  const auto dtype = scalar_from_nifti(h.datatype);
  const auto elem = scalar_size(dtype);
  if (h.bitpix != static_cast<std::int16_t>(elem * 8)) {
    throw io_error("nifti: bitpix does not match datatype in " + path.string());
  }
  const auto offset = static_cast<std::size_t>(h.vox_offset);
  if (h.vox_offset < 348.0f ||
      static_cast<float>(offset) != h.vox_offset) {
    throw io_error("nifti: malformed header (vox_offset) in " + path.string());
  }
  const std::size_t nvox =
      static_cast<std::size_t>(file_dims[0]) * file_dims[1] * file_dims[2];
  const std::size_t count = nvox * static_cast<std::size_t>(channels);
  if (bytes.size() < offset + count * elem) {
    throw io_error("nifti: truncated payload in " + path.string());
  }
  const auto file_values = decode_payload(
      std::span<const unsigned char>(bytes).subspan(offset, count * elem), dtype,
      count, swapped);

  // Scaling: applied to intensity, rejected for labels unless identity.
  const bool scl_active =
      h.scl_slope != 0.0f && !(h.scl_slope == 1.0f && h.scl_inter == 0.0f);
  if (as_labels && scl_active) {
    throw validation_error(
        "nifti: scl_slope/scl_inter scaling is not allowed on label volumes: " +
        path.string());
  }

  // Reorient to canonical RAS and canonical memory order (z fastest).
  RawVolume out;
  std::array<std::int64_t, 3> can_dims{1, 1, 1};
  std::array<double, 3> can_sizes{1.0, 1.0, 1.0};
  for (int a = 0; a < 3; ++a) {
    can_dims[map.world_of[a]] = file_dims[a];
    can_sizes[map.world_of[a]] = file_sizes[a];
  }
  if (spatial_ndim == 2) {
    const std::int64_t d2[2] = {can_dims[0], can_dims[1]};
    const double s2[2] = {can_sizes[0], can_sizes[1]};
    if (can_dims[2] != 1) {
      throw io_error("nifti: 2D volume with an out-of-plane axis in " + path.string());
    }
    out.geometry = VoxelGeometry::make(d2, s2);
  } else {
    out.geometry = VoxelGeometry::make(can_dims, can_sizes);
  }
  out.channels = channels;
  out.integer_source = dtype != ScalarType::float32;
  out.scaled = scl_active && !as_labels;

  const double slope = scl_active ? static_cast<double>(h.scl_slope) : 1.0;
  const double inter = scl_active ? static_cast<double>(h.scl_inter) : 0.0;

  out.data.resize(count);
  const std::int64_t n0 = file_dims[0], n1 = file_dims[1];
  const std::int64_t N0 = can_dims[0], N1 = can_dims[1], N2 = can_dims[2];
  for (int c = 0; c < channels; ++c) {
    const std::size_t file_plane = static_cast<std::size_t>(c) * nvox;
    const std::size_t can_plane = static_cast<std::size_t>(c) * nvox;
    for (std::int64_t X = 0; X < N0; ++X) {
      for (std::int64_t Y = 0; Y < N1; ++Y) {
        for (std::int64_t Z = 0; Z < N2; ++Z) {
          const std::int64_t o[3] = {X, Y, Z};
          std::int64_t f[3];
          for (int a = 0; a < 3; ++a) {
            const std::int64_t along = o[map.world_of[a]];
            f[a] = map.flip[a] ? file_dims[a] - 1 - along : along;
          }
          const std::size_t src = file_plane + static_cast<std::size_t>(
              f[0] + n0 * (f[1] + n1 * f[2]));
          const std::size_t dst = can_plane + static_cast<std::size_t>(
              (X * N1 + Y) * N2 + Z);
          out.data[dst] = slope * file_values[src] + inter;
        }
      }
    }
  }
  return out;
}

void nifti_save(const VoxelGeometry& geometry, int channels,
                std::span<const double> canonical, ScalarType dtype,
                const std::filesystem::path& path) {
  for (int a = 0; a < geometry.ndim(); ++a) {
    if (geometry.dim(a) > 32767) {
      throw validation_error("nifti: dim exceeds the format's int16 range");
    }
  }
  if (channels > 32767) {
    throw validation_error("nifti: channels exceed the format's int16 range");
  }
  Nifti1Header h{};
  h.sizeof_hdr = 348;
  h.regular = 'r';
  const int spatial_ndim = geometry.ndim();
  const int hdr_ndim = channels > 1 ? 5 : spatial_ndim;
  for (auto& d : h.dim) d = 1;
  h.dim[0] = static_cast<std::int16_t>(hdr_ndim);
  for (int a = 0; a < spatial_ndim; ++a) {
    h.dim[a + 1] = static_cast<std::int16_t>(geometry.dim(a));
  }
  if (channels > 1) {
    h.dim[5] = static_cast<std::int16_t>(channels);
    h.intent_code = kIntentVector;
  }
  h.datatype = nifti_from_scalar(dtype);
  h.bitpix = static_cast<std::int16_t>(scalar_size(dtype) * 8);
  h.pixdim[0] = 1.0f;
  for (int a = 0; a < 3; ++a) {
    h.pixdim[a + 1] = static_cast<float>(geometry.voxel_size(a));
  }
  h.vox_offset = 352.0f;
  h.scl_slope = 1.0f;
  h.scl_inter = 0.0f;
  h.xyzt_units = 2;  // NIFTI_UNITS_MM
  std::snprintf(h.descrip, sizeof(h.descrip), "%s %s", kToolName, kToolVersion);
  h.sform_code = 1;  // scanner-anatomical, canonical RAS axes
  h.qform_code = 0;
  h.srow_x[0] = static_cast<float>(geometry.voxel_size(0));
  h.srow_y[1] = static_cast<float>(geometry.voxel_size(1));
  h.srow_z[2] = static_cast<float>(geometry.voxel_size(2));
  std::memcpy(h.magic, "n+1", 4);

  // canonical (z fastest) -> file order (x fastest)
  const std::int64_t n0 = geometry.dim(0), n1 = geometry.dim(1), n2 = geometry.dim(2);
  const std::size_t nvox = static_cast<std::size_t>(geometry.voxel_count());
  std::vector<double> file_values(canonical.size());
  for (int c = 0; c < channels; ++c) {
    const std::size_t plane = static_cast<std::size_t>(c) * nvox;
    for (std::int64_t x = 0; x < n0; ++x) {
      for (std::int64_t y = 0; y < n1; ++y) {
        for (std::int64_t z = 0; z < n2; ++z) {
          file_values[plane + static_cast<std::size_t>(x + n0 * (y + n1 * z))] =
              canonical[plane + static_cast<std::size_t>((x * n1 + y) * n2 + z)];
        }
      }
    }
  }
  const auto payload = encode_payload(file_values, dtype);

  if (host_little_endian() == false) swap_header(h);
  const char pad[4] = {0, 0, 0, 0};

  const std::string name = path.string();
  const bool gz = name.size() > 3 && name.compare(name.size() - 3, 3, ".gz") == 0;
  if (gz) {
    gzFile f = gzopen(name.c_str(), "wb");
    if (!f) throw io_error("cannot open file for writing: " + name);
    bool ok = gzwrite(f, &h, sizeof(h)) == static_cast<int>(sizeof(h));
    ok = ok && gzwrite(f, pad, sizeof(pad)) == static_cast<int>(sizeof(pad));
    ok = ok && (payload.empty() ||
                gzwrite(f, payload.data(), static_cast<unsigned>(payload.size())) ==
                    static_cast<int>(payload.size()));
    ok = gzclose(f) == Z_OK && ok;
    if (!ok) throw io_error("failed to write file: " + name);
  } else {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open file for writing: " + name);
    f.write(reinterpret_cast<const char*>(&h), sizeof(h));
    f.write(pad, sizeof(pad));
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
    f.flush();
    if (!f) throw io_error("failed to write file: " + name);
  }
}

}  // namespace segaudit::detail
