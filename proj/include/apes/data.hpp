/*
 * Copyright 2026 The APES Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef APES_DATA_HPP_
#define APES_DATA_HPP_

#include <zlib.h>

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include "apes/error.hpp"
#include "apes/rng.hpp"

namespace apes {

struct Dataset {
  int m = 0;        // number of rows
  int p = 0;        // number of features
  int classes = 0;  // label range [0, classes)
  std::vector<double> features;  // m x p row-major, values in [0, 1]-ish
  std::vector<int> labels;

  const double* row(int i) const {
    return features.data() + static_cast<std::size_t>(i) * p;
  }
};

// Gaussian blobs around per-class centroids drawn uniformly from
// [-1, 1]^p. With noise 0 every sample sits on its centroid, so a linear
// classifier separates the classes perfectly.
inline Dataset synth_classification(int m, int p, int classes,
                                    std::uint64_t seed, double noise = 1.0) {
  if (m < 1 || p < 1 || classes < 1)
    throw parameter_error("m, p, classes must all be >= 1");
  if (!(noise >= 0.0)) throw parameter_error("noise must be >= 0");
  Rng rng = make_stream(seed, StreamTag::kDataGen);

  std::vector<double> centroids(static_cast<std::size_t>(classes) * p);
  for (double& c : centroids) c = rng.uniform(-1.0, 1.0);

  Dataset ds;
  ds.m = m;
  ds.p = p;
  ds.classes = classes;
  ds.features.resize(static_cast<std::size_t>(m) * p);
  ds.labels.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int y = static_cast<int>(
        rng.uniform_index(static_cast<std::uint64_t>(classes)));
    ds.labels[static_cast<std::size_t>(i)] = y;
    const double* mu = centroids.data() + static_cast<std::size_t>(y) * p;
    double* x = ds.features.data() + static_cast<std::size_t>(i) * p;
    for (int j = 0; j < p; ++j)
      x[j] = mu[j] + (noise > 0.0 ? noise * rng.normal() : 0.0);
  }
  return ds;
}

namespace detail {

inline std::vector<unsigned char> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return bytes;
}

inline std::vector<unsigned char> gunzip(const std::vector<unsigned char>& in,
                                         const std::string& path) {
  z_stream stream{};
  // 15 + 32: accept either zlib or gzip framing.
  if (inflateInit2(&stream, 15 + 32) != Z_OK)
    throw parse_error("zlib init failed for " + path);
  std::vector<unsigned char> out;
  out.resize(in.size() * 4 + 1024);
  stream.next_in = const_cast<unsigned char*>(in.data());
  stream.avail_in = static_cast<uInt>(in.size());
  std::size_t written = 0;
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    if (written == out.size()) out.resize(out.size() * 2);
    stream.next_out = out.data() + written;
    stream.avail_out = static_cast<uInt>(out.size() - written);
    rc = inflate(&stream, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&stream);
      throw parse_error("corrupt gzip stream in " + path);
    }
    written = out.size() - stream.avail_out;
  }
  inflateEnd(&stream);
  out.resize(written);
  return out;
}

// Raw bytes of an IDX file, transparently decompressing gzip.
inline std::vector<unsigned char> read_idx_bytes(const std::string& path) {
  auto bytes = read_file_bytes(path);
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b)
    return gunzip(bytes, path);
  return bytes;
}

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes,
                               std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size())
    throw parse_error("truncated IDX header in " + path);
  return (static_cast<std::uint32_t>(bytes[offset]) << 24) |
         (static_cast<std::uint32_t>(bytes[offset + 1]) << 16) |
         (static_cast<std::uint32_t>(bytes[offset + 2]) << 8) |
         static_cast<std::uint32_t>(bytes[offset + 3]);
}

}  // namespace detail

// Reads an MNIST-family image/label pair (big-endian IDX, optionally
// gzip-compressed). Pixels are scaled by 1/255; labels must be 0..9.
inline Dataset load_idx(const std::string& images_path,
                        const std::string& labels_path) {
  const auto img = detail::read_idx_bytes(images_path);
  const auto lab = detail::read_idx_bytes(labels_path);

  constexpr std::uint32_t kImageMagic = 0x00000803;
  constexpr std::uint32_t kLabelMagic = 0x00000801;

  const std::uint32_t img_magic = detail::read_be32(img, 0, images_path);
  if (img_magic != kImageMagic)
    throw parse_error("bad image magic in " + images_path + ": got " +
                      std::to_string(img_magic) + ", want " +
                      std::to_string(kImageMagic));
  const std::uint32_t lab_magic = detail::read_be32(lab, 0, labels_path);
  if (lab_magic != kLabelMagic)
    throw parse_error("bad label magic in " + labels_path + ": got " +
                      std::to_string(lab_magic) + ", want " +
                      std::to_string(kLabelMagic));

  const std::uint32_t count = detail::read_be32(img, 4, images_path);
  const std::uint32_t rows = detail::read_be32(img, 8, images_path);
  const std::uint32_t cols = detail::read_be32(img, 12, images_path);
  const std::uint32_t lab_count = detail::read_be32(lab, 4, labels_path);
  if (count != lab_count)
    throw parse_error("image/label count mismatch: " + std::to_string(count) +
                      " images vs " + std::to_string(lab_count) + " labels");

  const std::size_t pixels =
      static_cast<std::size_t>(count) * rows * cols;
  if (img.size() != 16 + pixels)
    throw parse_error("truncated image file " + images_path + ": expected " +
                      std::to_string(16 + pixels) + " bytes, got " +
                      std::to_string(img.size()));
  if (lab.size() != 8 + static_cast<std::size_t>(count))
    throw parse_error("truncated label file " + labels_path + ": expected " +
                      std::to_string(8 + count) + " bytes, got " +
                      std::to_string(lab.size()));

  Dataset ds;
  ds.m = static_cast<int>(count);
  ds.p = static_cast<int>(rows * cols);
  ds.classes = 10;
  ds.features.resize(pixels);
  for (std::size_t i = 0; i < pixels; ++i)
    ds.features[i] = static_cast<double>(img[16 + i]) / 255.0;
  ds.labels.resize(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const int y = static_cast<int>(lab[8 + i]);
    if (y > 9)
      throw parse_error("label out of range 0-9 in " + labels_path + ": " +
                        std::to_string(y));
    ds.labels[i] = y;
  }
  return ds;
}

// Disjoint covering shards of size floor(m/n) or ceil(m/n); the assignment
// of rows to shards is a seeded permutation.
inline std::vector<std::vector<int>> partition_even(const Dataset& ds,
                                                    int n_users,
                                                    std::uint64_t seed) {
  if (n_users < 1) throw parameter_error("n_users must be >= 1");
  if (ds.m < n_users)
    throw parameter_error("dataset has fewer rows than users");
  std::vector<int> order(static_cast<std::size_t>(ds.m));
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_stream(seed, StreamTag::kPartition);
  for (int i = ds.m - 1; i > 0; --i) {
    const int j = static_cast<int>(
        rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)],
              order[static_cast<std::size_t>(j)]);
  }
  const int base = ds.m / n_users;
  const int extra = ds.m % n_users;  // first `extra` shards take one more
  std::vector<std::vector<int>> shards(static_cast<std::size_t>(n_users));
  std::size_t cursor = 0;
  for (int u = 0; u < n_users; ++u) {
    const int size = base + (u < extra ? 1 : 0);
    shards[static_cast<std::size_t>(u)].assign(
        order.begin() + static_cast<std::ptrdiff_t>(cursor),
        order.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    cursor += static_cast<std::size_t>(size);
  }
  return shards;
}

}  // namespace apes

#endif  // APES_DATA_HPP_
