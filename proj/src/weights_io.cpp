/*
 * Copyright 2026 The TCLNet Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "tclnet/model.hpp"

namespace tclnet {

static_assert(std::endian::native == std::endian::little, "weights files assume a little-endian host");

namespace {

constexpr char kMagic[8] = {'T', 'C', 'L', 'N', 'E', 'T', 'W', '\0'};

std::uint64_t fnv1a(const unsigned char* data, std::size_t n) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

class Writer {
 public:
  template <typename V>
  void put(V v) {
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(V));
  }
  void put_bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    buf_.insert(buf_.end(), p, p + n);
  }
  void put_string32(const std::string& s) {
    put(static_cast<std::uint32_t>(s.size()));
    put_bytes(s.data(), s.size());
  }
  std::vector<unsigned char>& bytes() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const std::vector<unsigned char>& buf, std::size_t limit) : buf_(buf), limit_(limit) {}

  template <typename V>
  V get() {
    V v;
    std::memcpy(&v, take(sizeof(V)), sizeof(V));
    return v;
  }
  std::string get_string(std::size_t n) {
    const auto* p = take(n);
    return std::string(reinterpret_cast<const char*>(p), n);
  }
  const unsigned char* take(std::size_t n) {
    if (n > limit_ - pos_) throw CorruptWeightsError("weights file truncated");
    const auto* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<unsigned char>& buf_;
  std::size_t limit_;
  std::size_t pos_ = 0;
};

}  // namespace

const ArchiveTensor* Archive::find(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

template <typename T>
void write_archive(const std::filesystem::path& path, const std::string& header,
                   const std::vector<NamedTensor<T>>& tensors) {
  Writer w;
  w.put_bytes(kMagic, sizeof(kMagic));
  w.put(kWeightsVersion);
  w.put(static_cast<std::uint32_t>(sizeof(T)));
  w.put(static_cast<std::uint64_t>(header.size()));
  w.put_bytes(header.data(), header.size());
  w.put(static_cast<std::uint64_t>(tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    w.put_string32(t.name);
    w.put(static_cast<std::uint32_t>(t.tensor.dim()));
    for (std::size_t e : t.tensor.shape()) w.put(static_cast<std::uint64_t>(e));
    w.put(offset);
    offset += t.tensor.numel() * sizeof(T);
  }
  w.put(offset);
  for (const auto& t : tensors) w.put_bytes(t.tensor.data().data(), t.tensor.numel() * sizeof(T));
  auto& bytes = w.bytes();
  const std::uint64_t checksum = fnv1a(bytes.data(), bytes.size());
  w.put(checksum);

  // Write-then-rename so a crash never leaves a half-written file in place.
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "': " + ec.message());
}

Archive read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights file '" + path.string() + "'");
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + 8 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptWeightsError("'" + path.string() + "' is not a weights file");
  }
  if (bytes.size() < sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t)) {
    throw CorruptWeightsError("weights file truncated");
  }
  const std::size_t body = bytes.size() - sizeof(std::uint64_t);
  std::uint64_t stored;
  std::memcpy(&stored, bytes.data() + body, sizeof(stored));

  Reader r(bytes, body);
  r.take(sizeof(kMagic));
  const auto version = r.get<std::uint32_t>();
  if (version != kWeightsVersion) {
    throw CorruptWeightsError("unsupported weights version " + std::to_string(version) + " (expected " +
                              std::to_string(kWeightsVersion) + ")");
  }
  if (fnv1a(bytes.data(), body) != stored) {
    throw CorruptWeightsError("checksum mismatch in '" + path.string() + "'");
  }

  Archive a;
  a.value_bytes = r.get<std::uint32_t>();
  if (a.value_bytes != 4 && a.value_bytes != 8) {
    throw CorruptWeightsError("unsupported value width " + std::to_string(a.value_bytes));
  }
  a.header = r.get_string(r.get<std::uint64_t>());
  const auto count = r.get<std::uint64_t>();
  std::vector<std::uint64_t> offsets;
  for (std::uint64_t i = 0; i < count; ++i) {
    ArchiveTensor t;
    t.name = r.get_string(r.get<std::uint32_t>());
    const auto rank = r.get<std::uint32_t>();
    for (std::uint32_t d = 0; d < rank; ++d) t.shape.push_back(r.get<std::uint64_t>());
    offsets.push_back(r.get<std::uint64_t>());
    a.tensors.push_back(std::move(t));
  }
  const auto payload_bytes = r.get<std::uint64_t>();
  const unsigned char* payload = r.take(payload_bytes);
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    auto& t = a.tensors[i];
    const std::size_t n = numel(t.shape);
    if (offsets[i] + n * a.value_bytes > payload_bytes) {
      throw CorruptWeightsError("entry '" + t.name + "' exceeds the payload");
    }
    t.values.resize(n);
    const unsigned char* p = payload + offsets[i];
    for (std::size_t k = 0; k < n; ++k) {
      if (a.value_bytes == 4) {
        float f;
        std::memcpy(&f, p + 4 * k, 4);
        t.values[k] = f;
      } else {
        std::memcpy(&t.values[k], p + 8 * k, 8);
      }
    }
  }
  return a;
}

template <typename T>
void restore_tensors(const Archive& archive, const std::vector<NamedTensor<T>>& targets) {
  for (const auto& target : targets) {
    const ArchiveTensor* src = archive.find(target.name);
    if (!src) throw CorruptWeightsError("missing entry '" + target.name + "'");
    if (src->shape != target.tensor.shape()) {
      throw CorruptWeightsError("entry '" + target.name + "' has shape " + to_string(src->shape) +
                                ", expected " + to_string(target.tensor.shape()));
    }
    Tensor<T> dst = target.tensor;
    auto out = dst.mutable_data();
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = static_cast<T>(src->values[k]);
  }
}

template <typename T>
void save_weights(const TclNet<T>& net, const std::filesystem::path& path) {
  auto tensors = net.named_parameters();
  for (auto& b : net.named_buffers()) tensors.push_back(std::move(b));
  write_archive(path, net.config().to_text(), tensors);
}

namespace {
template <typename T>
TclNet<T> net_from_archive(const Archive& a) {
  ModelConfig config;
  try {
    config = ModelConfig::from_text(a.header);
  } catch (const ConfigError& e) {
    throw CorruptWeightsError(std::string("bad config in weights header: ") + e.what());
  }
  auto net = TclNet<T>::build(config, 0);
  restore_tensors(a, net.named_parameters());
  restore_tensors(a, net.named_buffers());
  return net;
}
}  // namespace

template <typename T>
TclNet<T> load_weights(const std::filesystem::path& path) {
  return net_from_archive<T>(read_archive(path));
}

template <typename T>
TclNet<T> load_weights(const std::filesystem::path& path, const ModelConfig& expected) {
  const Archive a = read_archive(path);
  const ModelConfig stored = ModelConfig::from_text(a.header);
  if (!(stored == expected)) {
    throw ConfigError("weights in '" + path.string() + "' were saved for a different model config:\n" +
                      stored.to_text() + "requested:\n" + expected.to_text());
  }
  return net_from_archive<T>(a);
}

#define TCLNET_INSTANTIATE(T)                                                                  \
  template void write_archive<T>(const std::filesystem::path&, const std::string&,            \
                                 const std::vector<NamedTensor<T>>&);                          \
  template void restore_tensors<T>(const Archive&, const std::vector<NamedTensor<T>>&);        \
  template void save_weights<T>(const TclNet<T>&, const std::filesystem::path&);               \
  template TclNet<T> load_weights<T>(const std::filesystem::path&);                            \
  template TclNet<T> load_weights<T>(const std::filesystem::path&, const ModelConfig&);

TCLNET_INSTANTIATE(float)
TCLNET_INSTANTIATE(double)

#undef TCLNET_INSTANTIATE

}  // namespace tclnet
