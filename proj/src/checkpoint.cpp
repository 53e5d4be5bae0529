#include "clarity/checkpoint.hpp"

#include <zlib.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "clarity/errors.hpp"

using nlohmann::json;

namespace clarity {

namespace {

constexpr char kMagic[8] = {'C', 'L', 'R', 'A', 'R', 'R', '1', '\n'};

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

uint64_t get_u64(const unsigned char* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

const Tensor& NamedArrays::find(const std::string& name) const {
  for (const auto& [n, t] : arrays)
    if (n == name) return t;
  throw CheckpointError("array not found in container: " + name);
}

bool NamedArrays::has(const std::string& name) const {
  for (const auto& [n, t] : arrays)
    if (n == name) return true;
  return false;
}

void save_array_container(const NamedArrays& data, const std::string& path) {
  json header;
  header["meta"] = data.meta;
  header["arrays"] = json::array();
  int64_t offset = 0;
  for (const auto& [name, t] : data.arrays) {
    header["arrays"].push_back({{"name", name}, {"shape", t.shape()}, {"offset", offset}});
    offset += t.numel();
  }
  const std::string hs = header.dump();

  std::string blob;
  blob.reserve(16 + hs.size() + static_cast<size_t>(offset) * 8 + 4);
  blob.append(kMagic, 8);
  put_u64(blob, hs.size());
  blob.append(hs);
  static_assert(sizeof(double) == 8);
  for (const auto& [name, t] : data.arrays) {
    const size_t nbytes = static_cast<size_t>(t.numel()) * 8;
    const size_t pos = blob.size();
    blob.resize(pos + nbytes);
    std::memcpy(blob.data() + pos, t.data(), nbytes);
  }
  const uint32_t crc = static_cast<uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(blob.data()), static_cast<uInt>(blob.size())));
  for (int i = 0; i < 4; ++i) blob.push_back(static_cast<char>((crc >> (8 * i)) & 0xff));

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write " + tmp);
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    if (!out) throw IoError("short write to " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

NamedArrays load_array_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < 20 || std::memcmp(blob.data(), kMagic, 8) != 0)
    throw CheckpointError("not an array container: " + path);
  const size_t body_len = blob.size() - 4;
  uint32_t stored_crc = 0;
  for (int i = 0; i < 4; ++i)
    stored_crc |= static_cast<uint32_t>(static_cast<unsigned char>(blob[body_len + i])) << (8 * i);
  const uint32_t crc = static_cast<uint32_t>(
      crc32(0, reinterpret_cast<const Bytef*>(blob.data()), static_cast<uInt>(body_len)));
  if (crc != stored_crc)
    throw CheckpointError("checksum mismatch (corrupt or truncated file): " + path);

  const uint64_t hlen = get_u64(reinterpret_cast<const unsigned char*>(blob.data()) + 8);
  if (16 + hlen > body_len) throw CheckpointError("corrupt header in " + path);
  json header;
  try {
    header = json::parse(blob.substr(16, hlen));
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad container header: ") + e.what());
  }

  NamedArrays out;
  out.meta = header.value("meta", json::object());
  const char* payload = blob.data() + 16 + hlen;
  const int64_t payload_count = static_cast<int64_t>((body_len - 16 - hlen) / 8);
  for (const auto& rec : header.at("arrays")) {
    const std::string name = rec.at("name").get<std::string>();
    const std::vector<int> shape = rec.at("shape").get<std::vector<int>>();
    const int64_t offset = rec.at("offset").get<int64_t>();
    const int64_t count = shape_numel(shape);
    if (offset < 0 || offset + count > payload_count)
      throw CheckpointError("array " + name + " out of bounds in " + path);
    Tensor t(shape);
    std::memcpy(t.data(), payload + offset * 8, static_cast<size_t>(count) * 8);
    out.arrays.emplace_back(name, std::move(t));
  }
  return out;
}

std::string CheckpointData::stage() const { return container.meta.value("stage", ""); }
std::string CheckpointData::kind() const { return container.meta.value("kind", ""); }
int CheckpointData::epoch() const { return container.meta.value("epoch", 0); }
int64_t CheckpointData::iteration() const { return container.meta.value("iteration", int64_t{0}); }
uint64_t CheckpointData::config_hash() const { return container.meta.value("config_hash", uint64_t{0}); }

void save_checkpoint(const CheckpointData& ck, const std::string& path) {
  if (!ck.container.meta.contains("stage"))
    throw CheckpointError("checkpoint meta missing stage tag");
  save_array_container(ck.container, path);
}

CheckpointData load_checkpoint(const std::string& path) {
  CheckpointData ck{load_array_container(path)};
  const int version = ck.container.meta.value("format_version", -1);
  if (version != kCheckpointFormatVersion)
    throw CheckpointError("unsupported checkpoint format version in " + path);
  if (ck.stage().empty()) throw CheckpointError("checkpoint missing stage tag: " + path);
  return ck;
}

}  // namespace clarity
