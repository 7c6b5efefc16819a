// SPDX-License-Identifier: Apache-2.0
#include <bit>
#include <cstring>
#include <fstream>

#include "dmoa/error.hpp"
#include "dmoa/router.hpp"

namespace dmoa {

namespace {

constexpr char kMagic[8] = {'D', 'M', 'O', 'A', 'R', 'P', 'R', 'M'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "snapshot I/O assumes a little-endian host");

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T get(std::ifstream& in, const std::string& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw IoError("truncated params snapshot: " + path);
  return v;
}

}  // namespace

void write_params(const std::string& path, const RouterParams& params, std::uint64_t seed) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open params snapshot for writing: " + path);
  out.write(kMagic, sizeof kMagic);
  put(out, kVersion);
  put<std::uint64_t>(out, params.dim);
  put<std::uint64_t>(out, params.pool_size);
  put<std::uint64_t>(out, seed);
  params.for_each_tensor([&](std::string_view, std::span<const double> v) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
  });
  if (!out) throw IoError("failed writing params snapshot: " + path);
}

ParamsSnapshot read_params(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open params snapshot: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw IoError("not a params snapshot: " + path);
  const auto version = get<std::uint32_t>(in, path);
  if (version != kVersion)
    throw IoError("unsupported params snapshot version " + std::to_string(version) + ": " + path);
  const auto d = get<std::uint64_t>(in, path);
  const auto n = get<std::uint64_t>(in, path);
  ParamsSnapshot snap;
  snap.seed = get<std::uint64_t>(in, path);
  if (d == 0 || n == 0 || d > (1U << 16) || n > (1U << 16)) throw IoError("implausible snapshot shape: " + path);
  snap.params = RouterParams::zeros(d, n);
  snap.params.for_each_tensor([&](std::string_view, std::span<double> v) {
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size_bytes()));
    if (!in) throw IoError("truncated params snapshot: " + path);
  });
  if (in.peek() != std::char_traits<char>::eof()) throw IoError("trailing bytes in params snapshot: " + path);
  return snap;
}

}  // namespace dmoa
