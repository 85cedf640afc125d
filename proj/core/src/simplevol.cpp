// SimpleVol: a JSON header next to a raw little-endian payload in canonical
// layout. See docs/formats.md for the byte-level contract.

#include <fstream>
#include <vector>

#include <json.hpp>

#include "format_detail.hpp"
#include "segaudit/error.hpp"

namespace segaudit::detail {

namespace {

using nlohmann::json;

json read_json_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw io_error("cannot open file: " + path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw io_error("simplevol: malformed JSON header in " + path.string() + ": " +
                   e.what());
  }
  return j;
}

}  // namespace

RawVolume simplevol_load(const std::filesystem::path& path) {
  const json j = read_json_file(path);
  RawVolume out;
  try {
    const auto dims = j.at("dims").get<std::vector<std::int64_t>>();
    const auto sizes = j.at("voxel_size").get<std::vector<double>>();
    out.geometry = VoxelGeometry::make(dims, sizes);
    out.channels = j.value("channels", 1);
    const auto dtype = scalar_type_from_string(j.at("dtype").get<std::string>());
    const auto data_file = j.at("data_file").get<std::string>();

    const auto payload_path = path.parent_path() / data_file;
    std::ifstream f(payload_path, std::ios::binary);
    if (!f) throw io_error("simplevol: cannot open payload: " + payload_path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                     std::istreambuf_iterator<char>());
    const std::size_t count = static_cast<std::size_t>(out.geometry.voxel_count()) *
                              static_cast<std::size_t>(out.channels);
    if (bytes.size() < count * scalar_size(dtype)) {
      throw io_error("simplevol: truncated payload: " + payload_path.string());
    }
    out.data = decode_payload(bytes, dtype, count, !host_little_endian());
    out.integer_source = dtype == ScalarType::uint8 || dtype == ScalarType::int16 ||
                         dtype == ScalarType::int32;
  } catch (const json::exception& e) {
    throw io_error("simplevol: invalid header in " + path.string() + ": " + e.what());
  }
  return out;
}

void simplevol_save(const VoxelGeometry& geometry, int channels,
                    std::span<const double> canonical, ScalarType dtype,
                    const std::filesystem::path& path) {
  std::filesystem::path data_path = path;
  data_path.replace_extension(".bin");

  json j;
  std::vector<std::int64_t> dims;
  std::vector<double> sizes;
  for (int a = 0; a < geometry.ndim(); ++a) {
    dims.push_back(geometry.dim(a));
    sizes.push_back(geometry.voxel_size(a));
  }
  j["format"] = "simplevol";
  j["version"] = 1;
  j["dims"] = dims;
  j["voxel_size"] = sizes;
  j["dtype"] = std::string(to_string(dtype));
  j["channels"] = channels;
  j["data_file"] = data_path.filename().string();

  const auto payload = encode_payload(canonical, dtype);
  {
    std::ofstream f(data_path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open file for writing: " + data_path.string());
    f.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
    f.flush();
    if (!f) throw io_error("failed to write file: " + data_path.string());
  }
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw io_error("cannot open file for writing: " + path.string());
    f << j.dump(2) << "\n";
    f.flush();
    if (!f) throw io_error("failed to write file: " + path.string());
  }
}

}  // namespace segaudit::detail
