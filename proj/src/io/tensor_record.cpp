#include "hyperds/io/tensor_record.hpp"

#include <bit>
#include <cstdio>

#include "hyperds/core/error.hpp"

namespace hyperds::io {

static_assert(std::endian::native == std::endian::little,
              "payloads are little-endian float32; big-endian hosts need byte swaps");

void write_f32(const std::filesystem::path& file, const float* data, std::int64_t count) {
  std::FILE* f = std::fopen(file.c_str(), "wb");
  if (!f) throw IoError("cannot open for write: " + file.string());
  const size_t written = std::fwrite(data, sizeof(float), static_cast<size_t>(count), f);
  std::fclose(f);
  if (written != static_cast<size_t>(count))
    throw IoError("short write: " + file.string());
}

std::vector<float> read_f32(const std::filesystem::path& file, std::int64_t expected_elements) {
  std::error_code ec;
  if (!std::filesystem::exists(file, ec))
    throw MissingFileError("missing payload file: " + file.string());
  const auto bytes = std::filesystem::file_size(file, ec);
  if (ec) throw IoError("cannot stat: " + file.string());
  const std::uint64_t expected_bytes = static_cast<std::uint64_t>(expected_elements) * 4u;
  if (bytes != expected_bytes)
    throw LengthError("length mismatch for " + file.string() + ": expected " +
                      std::to_string(expected_bytes) + " bytes, found " + std::to_string(bytes));
  std::vector<float> out(static_cast<size_t>(expected_elements));
  std::FILE* f = std::fopen(file.c_str(), "rb");
  if (!f) throw IoError("cannot open for read: " + file.string());
  const size_t got = std::fread(out.data(), sizeof(float), out.size(), f);
  std::fclose(f);
  if (got != out.size()) throw IoError("short read: " + file.string());
  return out;
}

DirLock::DirLock(const std::filesystem::path& dir) : lock_path_(dir / ".lock") {
  std::filesystem::create_directories(dir);
  std::FILE* f = std::fopen(lock_path_.c_str(), "wx");
  if (!f)
    throw IoError("directory is locked by another writer: " + dir.string() +
                  " (stale '.lock' file?)");
  std::fclose(f);
  held_ = true;
}

DirLock::~DirLock() {
  if (held_) {
    std::error_code ec;
    std::filesystem::remove(lock_path_, ec);
  }
}

}  // namespace hyperds::io
