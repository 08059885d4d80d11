#include <cctype>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "histoseg/errors.hpp"
#include "histoseg/porosity.hpp"

namespace histoseg {

namespace {

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in, const std::string& name) {
  std::string token;
  int ch = in.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n' && ch != '\r') ch = in.get();
    } else if (std::isspace(ch)) {
      ch = in.get();
    } else {
      break;
    }
  }
  while (ch != EOF && !std::isspace(ch) && ch != '#') {
    token.push_back(static_cast<char>(ch));
    ch = in.get();
  }
  if (token.empty()) fail(ErrorKind::Format, name + ": truncated PGM header");
  if (ch == '#') in.unget();
  return token;
}

std::size_t header_number(std::istream& in, const std::string& name, const char* field) {
  const std::string token = header_token(in, name);
  std::size_t value = 0;
  for (char c : token) {
    if (c < '0' || c > '9') fail(ErrorKind::Format, name + ": bad " + field + " '" + token + "'");
    value = value * 10 + static_cast<std::size_t>(c - '0');
    if (value > 1u << 30) fail(ErrorKind::Format, name + ": " + field + " too large");
  }
  return value;
}

}  // namespace

ImageStack read_pgm(const std::filesystem::path& path) {
  const std::string name = path.string();
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + name);
  if (header_token(in, name) != "P5") fail(ErrorKind::Format, name + ": not a binary PGM (P5)");
  const std::size_t width = header_number(in, name, "width");
  const std::size_t height = header_number(in, name, "height");
  const std::size_t maxval = header_number(in, name, "maxval");
  if (width == 0 || height == 0) fail(ErrorKind::Format, name + ": zero image dimension");
  if (maxval == 0 || maxval > 65535) fail(ErrorKind::Format, name + ": maxval out of range");
  // The header ends with exactly one whitespace byte, consumed by header_token.

  const std::size_t bytes_per_sample = maxval < 256 ? 1 : 2;
  const std::size_t count = width * height;
  std::vector<unsigned char> raw(count * bytes_per_sample);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) fail(ErrorKind::Format, name + ": truncated pixel data");

  ImageStack stack;
  stack.width = width;
  stack.height = height;
  stack.maxval = static_cast<std::uint16_t>(maxval);
  std::vector<std::uint16_t> pixels(count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint16_t v = bytes_per_sample == 1
                                ? raw[i]
                                : static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
    if (v > maxval) fail(ErrorKind::Format, name + ": sample exceeds maxval");
    pixels[i] = v;
  }
  stack.slices.push_back(std::move(pixels));
  return stack;
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height, std::uint16_t maxval,
               const std::vector<std::uint16_t>& pixels) {
  if (pixels.size() != width * height) fail(ErrorKind::InvalidArgument, "write_pgm: pixel count mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "P5\n" << width << ' ' << height << '\n' << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(pixels.size() * 2);
  for (std::uint16_t v : pixels) {
    if (maxval < 256) {
      raw.push_back(static_cast<unsigned char>(v));
    } else {
      raw.push_back(static_cast<unsigned char>(v >> 8));
      raw.push_back(static_cast<unsigned char>(v & 0xFF));
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(ErrorKind::Io, "write failed: " + path.string());
}

ImageStack load_stack(const std::vector<std::filesystem::path>& paths) {
  if (paths.empty()) fail(ErrorKind::Io, "load_stack: no input files");
  ImageStack stack;
  for (const auto& path : paths) {
    ImageStack slice = read_pgm(path);
    if (stack.slices.empty()) {
      stack.width = slice.width;
      stack.height = slice.height;
      stack.maxval = slice.maxval;
    } else if (slice.width != stack.width || slice.height != stack.height) {
      fail(ErrorKind::Format, path.string() + ": dimensions differ from the first slice");
    } else if (slice.maxval != stack.maxval) {
      fail(ErrorKind::Format, path.string() + ": maxval differs from the first slice");
    }
    stack.slices.push_back(std::move(slice.slices.front()));
  }
  return stack;
}

std::vector<std::filesystem::path> write_stack(const ImageStack& stack, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (std::size_t s = 0; s < stack.slices.size(); ++s) {
    std::ostringstream name;
    name << "slice_" << std::setw(4) << std::setfill('0') << s << ".pgm";
    paths.push_back(dir / name.str());
    write_pgm(paths.back(), stack.width, stack.height, stack.maxval, stack.slices[s]);
  }
  return paths;
}

}  // namespace histoseg
