#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "csvddnet/errors.hpp"

namespace csvddnet {

inline constexpr char kBundleMagic[8] = {'C', 'S', 'V', 'D', 'D', 'N', 'E', 'T'};
inline constexpr uint32_t kBundleVersion = 1;

namespace detail {

inline void put_u32le(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64le(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_i64le(std::string& out, int64_t v) { put_u64le(out, static_cast<uint64_t>(v)); }

inline void put_f64le(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64le(out, bits);
}

struct Cursor {
  const std::string& data;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) const {
    if (pos + n > data.size()) throw TruncatedPayload(std::string("bundle: truncated ") + what);
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  uint64_t u64(const char* what) {
    need(8, what);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
    pos += 8;
    return v;
  }
  int64_t i64(const char* what) { return static_cast<int64_t>(u64(what)); }
  double f64(const char* what) {
    const uint64_t bits = u64(what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string bytes(std::size_t n, const char* what) {
    need(n, what);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace detail

// Single-file model container: magic, version, then named length-prefixed
// sections in a stable order. set() replaces in place so append-rewrite
// cycles stay byte-identical.
struct Bundle {
  uint32_t version = kBundleVersion;
  std::vector<std::pair<std::string, std::string>> sections;

  bool has(const std::string& name) const {
    for (const auto& [n, p] : sections)
      if (n == name) return true;
    return false;
  }

  const std::string& raw(const std::string& name) const {
    for (const auto& [n, p] : sections)
      if (n == name) return p;
    throw BundleError("bundle: missing section '" + name + "'");
  }

  void set(const std::string& name, std::string payload) {
    for (auto& [n, p] : sections)
      if (n == name) {
        p = std::move(payload);
        return;
      }
    sections.emplace_back(name, std::move(payload));
  }
};

inline void write_bundle(const std::string& path, const Bundle& bundle) {
  std::string out;
  out.append(kBundleMagic, 8);
  detail::put_u32le(out, bundle.version);
  for (const auto& [name, payload] : bundle.sections) {
    detail::put_u32le(out, static_cast<uint32_t>(name.size()));
    out += name;
    detail::put_u64le(out, payload.size());
    out += payload;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw BundleError("cannot open " + path + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw BundleError("short write to " + path);
}

inline Bundle read_bundle(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw BundleError("cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (data.size() < 12 || std::memcmp(data.data(), kBundleMagic, 8) != 0)
    throw BadMagic("bundle: bad magic in " + path);

  detail::Cursor cur{data, 8};
  Bundle bundle;
  bundle.version = cur.u32("version");
  if (bundle.version != kBundleVersion)
    throw BundleError("bundle: version " + std::to_string(bundle.version) + ", expected " +
                      std::to_string(kBundleVersion));
  while (cur.pos < data.size()) {
    const uint32_t name_len = cur.u32("section name length");
    const std::string name = cur.bytes(name_len, "section name");
    const uint64_t payload_len = cur.u64("section payload length");
    bundle.sections.emplace_back(name, cur.bytes(payload_len, "section payload"));
  }
  return bundle;
}

// section payload helpers

inline std::string pack_matrix(const Eigen::MatrixXd& M) {
  std::string out;
  detail::put_i64le(out, M.rows());
  detail::put_i64le(out, M.cols());
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) detail::put_f64le(out, M(i, j));
  return out;
}

inline Eigen::MatrixXd unpack_matrix(const std::string& payload) {
  detail::Cursor cur{payload, 0};
  const int64_t rows = cur.i64("matrix rows");
  const int64_t cols = cur.i64("matrix cols");
  if (rows < 0 || cols < 0) throw BundleError("bundle: negative matrix dims");
  const std::size_t want = 16 + 8 * static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);
  if (payload.size() < want) throw TruncatedPayload("bundle: truncated matrix payload");
  if (payload.size() > want) throw BundleError("bundle: trailing bytes after matrix payload");
  Eigen::MatrixXd M(rows, cols);
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) M(i, j) = cur.f64("matrix entry");
  return M;
}

inline std::string pack_vector(const Eigen::VectorXd& v) { return pack_matrix(v); }

inline Eigen::VectorXd unpack_vector(const std::string& payload) {
  const Eigen::MatrixXd M = unpack_matrix(payload);
  if (M.cols() != 1) throw BundleError("bundle: expected a column vector");
  return M.col(0);
}

inline std::string pack_i64_list(const std::vector<int64_t>& xs) {
  std::string out;
  detail::put_i64le(out, static_cast<int64_t>(xs.size()));
  for (int64_t x : xs) detail::put_i64le(out, x);
  return out;
}

inline std::vector<int64_t> unpack_i64_list(const std::string& payload) {
  detail::Cursor cur{payload, 0};
  const int64_t n = cur.i64("list length");
  if (n < 0) throw BundleError("bundle: negative list length");
  std::vector<int64_t> xs(static_cast<std::size_t>(n));
  for (int64_t i = 0; i < n; ++i) xs[static_cast<std::size_t>(i)] = cur.i64("list entry");
  return xs;
}

inline std::string pack_f64(double v) {
  std::string out;
  detail::put_f64le(out, v);
  return out;
}

inline double unpack_f64(const std::string& payload) {
  detail::Cursor cur{payload, 0};
  return cur.f64("scalar");
}

inline std::string pack_i64(int64_t v) {
  std::string out;
  detail::put_i64le(out, v);
  return out;
}

inline int64_t unpack_i64(const std::string& payload) {
  detail::Cursor cur{payload, 0};
  return cur.i64("scalar");
}

// Flat matrix file shared by eval and retrieval: ASCII header
// "rows cols\n", then row-major little-endian 64-bit floats.
inline void write_descriptor_matrix(const std::string& path, const Eigen::MatrixXd& M) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw BundleError("cannot open " + path + " for writing");
  f << M.rows() << " " << M.cols() << "\n";
  std::string body;
  body.reserve(static_cast<std::size_t>(M.rows()) * static_cast<std::size_t>(M.cols()) * 8);
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) detail::put_f64le(body, M(i, j));
  f.write(body.data(), static_cast<std::streamsize>(body.size()));
  if (!f) throw BundleError("short write to " + path);
}

inline Eigen::MatrixXd read_descriptor_matrix(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw BundleError("cannot open " + path);
  int64_t rows = 0, cols = 0;
  f >> rows >> cols;
  if (!f || rows < 0 || cols < 0) throw BundleError("bad descriptor matrix header in " + path);
  f.get();  // newline after the header
  std::string body((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  const std::size_t expect = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols) * 8;
  if (body.size() < expect) throw TruncatedPayload("descriptor matrix " + path);
  if (body.size() > expect) throw BundleError("trailing bytes in descriptor matrix " + path);
  detail::Cursor cur{body, 0};
  Eigen::MatrixXd M(rows, cols);
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) M(i, j) = cur.f64("matrix entry");
  return M;
}

inline void write_id_lines(const std::string& path, const std::vector<std::string>& ids) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw BundleError("cannot open " + path + " for writing");
  for (const std::string& id : ids) f << id << "\n";
  if (!f) throw BundleError("short write to " + path);
}

inline std::vector<std::string> read_id_lines(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw BundleError("cannot open " + path);
  std::vector<std::string> ids;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) ids.push_back(line);
  return ids;
}

}  // namespace csvddnet
