#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

#include "csvddnet/errors.hpp"
#include "csvddnet/image.hpp"

namespace csvddnet {

// Binary portable graymap ("P5"), maxval <= 255. "P6" color maps are
// accepted and converted to luma Y = 0.299 R + 0.587 G + 0.114 B.

namespace detail {

// Next whitespace-delimited header token, skipping '#' comment lines.
inline std::string pnm_token(std::istream& in) {
  std::string tok;
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (std::isspace(c)) {
      c = in.get();
    } else {
      break;
    }
  }
  while (c != EOF && !std::isspace(c)) {
    tok.push_back(static_cast<char>(c));
    c = in.get();
  }
  if (tok.empty()) throw TruncatedPayload("pnm: header ended early");
  return tok;
}

inline int pnm_int(std::istream& in, const std::string& what) {
  const std::string tok = pnm_token(in);
  try {
    std::size_t pos = 0;
    const int v = std::stoi(tok, &pos);
    if (pos != tok.size() || v < 0) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw UnsupportedFormat("pnm: bad " + what + " token '" + tok + "'");
  }
}

}  // namespace detail

inline GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("pnm: cannot open " + path);

  const std::string magic = detail::pnm_token(in);
  const bool color = magic == "P6";
  if (magic != "P5" && !color)
    throw UnsupportedFormat("pnm: magic '" + magic + "' not supported (want P5 or P6): " + path);

  const int width = detail::pnm_int(in, "width");
  const int height = detail::pnm_int(in, "height");
  const int maxval = detail::pnm_int(in, "maxval");
  if (maxval < 1 || maxval > 255)
    throw UnsupportedFormat("pnm: maxval " + std::to_string(maxval) + " out of range: " + path);
  // pnm_int consumed exactly one whitespace byte after maxval; pixel data follows

  const int channels = color ? 3 : 1;
  const std::size_t expected = std::size_t(width) * height * channels;
  std::vector<unsigned char> bytes(expected);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected));
  if (static_cast<std::size_t>(in.gcount()) != expected)
    throw TruncatedPayload("pnm: pixel data shorter than header declares: " + path);

  GrayImage img(width, height);
  for (std::size_t p = 0; p < std::size_t(width) * height; ++p) {
    if (color) {
      const double r = bytes[3 * p + 0], g = bytes[3 * p + 1], b = bytes[3 * p + 2];
      img.values[p] = (0.299 * r + 0.587 * g + 0.114 * b) / maxval;
    } else {
      img.values[p] = bytes[p] / static_cast<double>(maxval);
    }
  }
  return img;
}

inline void write_pgm(const std::string& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("pnm: cannot write " + path);
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  for (double v : img.values) {
    const long q = std::lround(v * 255.0);
    const unsigned char b = static_cast<unsigned char>(q < 0 ? 0 : (q > 255 ? 255 : q));
    out.write(reinterpret_cast<const char*>(&b), 1);
  }
}

}  // namespace csvddnet
