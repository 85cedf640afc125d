#include "segaudit/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <set>

#include "format_detail.hpp"
#include "segaudit/error.hpp"

namespace segaudit {

std::string_view to_string(ScalarType t) {
  switch (t) {
    case ScalarType::uint8: return "uint8";
    case ScalarType::int16: return "int16";
    case ScalarType::int32: return "int32";
    case ScalarType::float32: return "float32";
    case ScalarType::float64: return "float64";
  }
  throw validation_error("unknown scalar type");
}

ScalarType scalar_type_from_string(std::string_view s) {
  if (s == "uint8") return ScalarType::uint8;
  if (s == "int16") return ScalarType::int16;
  if (s == "int32") return ScalarType::int32;
  if (s == "float32") return ScalarType::float32;
  if (s == "float64") return ScalarType::float64;
  throw validation_error("unknown scalar type: " + std::string(s));
}

namespace detail {

std::size_t scalar_size(ScalarType t) {
  switch (t) {
    case ScalarType::uint8: return 1;
    case ScalarType::int16: return 2;
    case ScalarType::int32: return 4;
    case ScalarType::float32: return 4;
    case ScalarType::float64: return 8;
  }
  throw validation_error("unknown scalar type");
}

namespace {

template <typename T>
void decode_typed(std::span<const unsigned char> bytes, std::size_t count,
                  bool swap, std::vector<double>& out) {
  for (std::size_t i = 0; i < count; ++i) {
    T v;
    std::memcpy(&v, bytes.data() + i * sizeof(T), sizeof(T));
    if (swap) v = byteswap_value(v);
    out[i] = static_cast<double>(v);
  }
}

template <typename T>
std::vector<unsigned char> encode_integers(std::span<const double> values) {
  std::vector<unsigned char> out(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double rounded = std::nearbyint(values[i]);
    if (rounded < static_cast<double>(std::numeric_limits<T>::min()) ||
        rounded > static_cast<double>(std::numeric_limits<T>::max())) {
      throw validation_error("save: value " + std::to_string(values[i]) +
                             " does not fit the requested integer dtype");
    }
    T v = static_cast<T>(rounded);
    if (!host_little_endian()) v = byteswap_value(v);
    std::memcpy(out.data() + i * sizeof(T), &v, sizeof(T));
  }
  return out;
}

template <typename T>
std::vector<unsigned char> encode_floats(std::span<const double> values) {
  std::vector<unsigned char> out(values.size() * sizeof(T));
  for (std::size_t i = 0; i < values.size(); ++i) {
    T v = static_cast<T>(values[i]);
    if (!host_little_endian()) v = byteswap_value(v);
    std::memcpy(out.data() + i * sizeof(T), &v, sizeof(T));
  }
  return out;
}

}  // namespace

std::vector<double> decode_payload(std::span<const unsigned char> bytes,
                                   ScalarType t, std::size_t count, bool swap) {
  if (bytes.size() < count * scalar_size(t)) {
    throw io_error("payload shorter than expected");
  }
  std::vector<double> out(count);
  switch (t) {
    case ScalarType::uint8: decode_typed<std::uint8_t>(bytes, count, false, out); break;
    case ScalarType::int16: decode_typed<std::int16_t>(bytes, count, swap, out); break;
    case ScalarType::int32: decode_typed<std::int32_t>(bytes, count, swap, out); break;
    case ScalarType::float32: decode_typed<float>(bytes, count, swap, out); break;
    case ScalarType::float64: decode_typed<double>(bytes, count, swap, out); break;
  }
  return out;
}

std::vector<unsigned char> encode_payload(std::span<const double> values,
                                          ScalarType t) {
  switch (t) {
    case ScalarType::uint8: return encode_integers<std::uint8_t>(values);
    case ScalarType::int16: return encode_integers<std::int16_t>(values);
    case ScalarType::int32: return encode_integers<std::int32_t>(values);
    case ScalarType::float32: return encode_floats<float>(values);
    case ScalarType::float64: return encode_floats<double>(values);
  }
  throw validation_error("unknown scalar type");
}

}  // namespace detail

namespace {

using detail::RawVolume;

VolumeFormat detect_format(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  auto ends_with = [&name](std::string_view suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".nii") || ends_with(".nii.gz")) return VolumeFormat::nifti;
  if (ends_with(".svol")) return VolumeFormat::simplevol;

  // Fall back to content sniffing.
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open file: " + path.string());
  unsigned char head[4] = {0, 0, 0, 0};
  f.read(reinterpret_cast<char*>(head), sizeof(head));
  if (head[0] == 0x1f && head[1] == 0x8b) return VolumeFormat::nifti;  // gzip
  const bool nifti_magic =
      (head[0] == 0x5c && head[1] == 0x01 && head[2] == 0 && head[3] == 0) ||
      (head[3] == 0x5c && head[2] == 0x01 && head[1] == 0 && head[0] == 0);
  if (nifti_magic) return VolumeFormat::nifti;
  for (unsigned char ch : head) {
    if (ch == '{') return VolumeFormat::simplevol;
    if (!std::isspace(ch)) break;
  }
  throw io_error("unrecognized volume format: " + path.string());
}

VolumeFormat detect_format_for_save(const std::filesystem::path& path) {
  const std::string name = path.filename().string();
  auto ends_with = [&name](std::string_view suffix) {
    return name.size() >= suffix.size() &&
           name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with(".nii") || ends_with(".nii.gz")) return VolumeFormat::nifti;
  if (ends_with(".svol")) return VolumeFormat::simplevol;
  throw validation_error(
      "cannot infer volume format from file name (use .nii, .nii.gz or .svol): " +
      path.string());
}

RawVolume load_raw(const std::filesystem::path& path, bool as_labels) {
  if (!std::filesystem::exists(path)) {
    throw io_error("file does not exist: " + path.string());
  }
  switch (detect_format(path)) {
    case VolumeFormat::nifti: return detail::nifti_load(path, as_labels);
    case VolumeFormat::simplevol: return detail::simplevol_load(path);
  }
  throw io_error("unrecognized volume format: " + path.string());
}

constexpr double kLabelIntegralTol = 1e-6;

std::vector<std::int32_t> to_labels(const RawVolume& raw,
                                    const std::filesystem::path& path) {
  if (raw.channels != 1) {
    throw validation_error("label volumes must be single channel: " + path.string());
  }
  std::vector<std::int32_t> labels(raw.data.size());
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    const double v = raw.data[i];
    const double rounded = std::nearbyint(v);
    if (std::abs(v - rounded) > kLabelIntegralTol) {
      throw validation_error("non-integral label value " + std::to_string(v) +
                             " in " + path.string());
    }
    if (rounded < 0.0) {
      throw validation_error("negative label value in " + path.string());
    }
    if (rounded > static_cast<double>(std::numeric_limits<std::int32_t>::max())) {
      throw validation_error("label value out of int32 range in " + path.string());
    }
    labels[i] = static_cast<std::int32_t>(rounded);
  }
  return labels;
}

}  // namespace

VoxelGrid load_intensity(const std::filesystem::path& path) {
  auto raw = load_raw(path, /*as_labels=*/false);
  return VoxelGrid(raw.geometry, std::move(raw.data), raw.channels);
}

LabelMap load_labels(const std::filesystem::path& path) {
  const auto raw = load_raw(path, /*as_labels=*/true);
  auto labels = to_labels(raw, path);
  LabelTable table;
  std::set<std::int32_t> distinct(labels.begin(), labels.end());
  for (std::int32_t id : distinct) {
    if (id != 0) table.add(id, "label_" + std::to_string(id));
  }
  return LabelMap(raw.geometry, std::move(labels), std::move(table));
}

void save_volume(const VoxelGrid& grid, const std::filesystem::path& path) {
  const auto fmt = detect_format_for_save(path);
  save_volume(grid, path,
              fmt == VolumeFormat::nifti ? ScalarType::float32 : ScalarType::float64);
}

void save_volume(const VoxelGrid& grid, const std::filesystem::path& path,
                 ScalarType dtype) {
  const auto fmt = detect_format_for_save(path);
  if (dtype != ScalarType::float32 && dtype != ScalarType::float64) {
    throw validation_error("intensity volumes save as float32 or float64");
  }
  if (fmt == VolumeFormat::nifti) {
    if (dtype == ScalarType::float64) {
      throw validation_error("nifti writing supports float32 intensity only");
    }
    detail::nifti_save(grid.geometry(), grid.channels(), grid.data(), dtype, path);
  } else {
    detail::simplevol_save(grid.geometry(), grid.channels(), grid.data(), dtype, path);
  }
}

void save_volume(const LabelMap& labels, const std::filesystem::path& path) {
  save_volume(labels, path, ScalarType::int32);
}

void save_volume(const LabelMap& labels, const std::filesystem::path& path,
                 ScalarType dtype) {
  if (dtype == ScalarType::float32 || dtype == ScalarType::float64) {
    throw validation_error("label volumes save as integer dtypes");
  }
  std::vector<double> values(labels.labels().size());
  std::transform(labels.labels().begin(), labels.labels().end(), values.begin(),
                 [](std::int32_t v) { return static_cast<double>(v); });
  if (detect_format_for_save(path) == VolumeFormat::nifti) {
    detail::nifti_save(labels.geometry(), 1, values, dtype, path);
  } else {
    detail::simplevol_save(labels.geometry(), 1, values, dtype, path);
  }
}

}  // namespace segaudit
