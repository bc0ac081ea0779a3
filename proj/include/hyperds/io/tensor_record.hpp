#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hyperds::io {

// Named row-major float32 array; the only payload type anything persists.
struct TensorRecord {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> data;

  std::int64_t element_count() const {
    std::int64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
  }
};

// Raw little-endian float32 payload I/O. read checks the byte length against
// expected_elements * 4 and throws LengthError naming the file.
void write_f32(const std::filesystem::path& file, const float* data, std::int64_t count);
std::vector<float> read_f32(const std::filesystem::path& file, std::int64_t expected_elements);

// Exclusive per-directory write lock (".lock" sentinel), RAII.
class DirLock {
 public:
  explicit DirLock(const std::filesystem::path& dir);
  ~DirLock();
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::filesystem::path lock_path_;
  bool held_ = false;
};

}  // namespace hyperds::io
