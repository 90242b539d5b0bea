#include "d2d/npy.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "d2d/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "npy I/O assumes a little-endian host");

namespace d2d::npy {
namespace {

constexpr char kMagic[] = "\x93NUMPY";
constexpr std::size_t kMagicLen = 6;

// Returns the text following `'key':` up to the next top-level comma.
std::string dict_value(const std::string& dict, const std::string& key) {
  const std::string quoted_single = "'" + key + "'";
  const std::string quoted_double = "\"" + key + "\"";
  auto pos = dict.find(quoted_single);
  std::size_t key_len = quoted_single.size();
  if (pos == std::string::npos) {
    pos = dict.find(quoted_double);
    key_len = quoted_double.size();
  }
  if (pos == std::string::npos) fail(ErrorKind::Format, "npy header lacks '" + key + "'");
  pos = dict.find(':', pos + key_len);
  if (pos == std::string::npos) fail(ErrorKind::Format, "npy header malformed near '" + key + "'");
  ++pos;
  while (pos < dict.size() && dict[pos] == ' ') ++pos;
  std::size_t end = pos;
  int depth = 0;
  for (; end < dict.size(); ++end) {
    const char c = dict[end];
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (depth == 0 && (c == ',' || c == '}')) break;
  }
  return dict.substr(pos, end - pos);
}

std::string unquote(std::string s) {
  while (!s.empty() && s.back() == ' ') s.pop_back();
  if (s.size() >= 2 && (s.front() == '\'' || s.front() == '"') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  fail(ErrorKind::Format, "npy header: expected a quoted string, got " + s);
}

std::vector<std::size_t> parse_shape(const std::string& text) {
  const auto open = text.find('(');
  const auto close = text.find(')');
  if (open == std::string::npos || close == std::string::npos || close < open)
    fail(ErrorKind::Format, "npy header: malformed shape " + text);
  std::vector<std::size_t> shape;
  std::string inner = text.substr(open + 1, close - open - 1);
  std::stringstream ss(inner);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto first = item.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    item = item.substr(first);
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(item, &used);
    } catch (const std::exception&) {
      fail(ErrorKind::Format, "npy header: bad shape entry '" + item + "'");
    }
    if (item.find_first_not_of(" \tL", used) != std::string::npos)
      fail(ErrorKind::Format, "npy header: bad shape entry '" + item + "'");
    shape.push_back(static_cast<std::size_t>(v));
  }
  return shape;
}

template <typename T>
std::vector<T> read_payload(std::istream& in, std::size_t count) {
  std::vector<T> out(count);
  in.read(reinterpret_cast<char*>(out.data()),
          static_cast<std::streamsize>(count * sizeof(T)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(T))
    fail(ErrorKind::Format, "npy data truncated");
  return out;
}

std::ifstream open_input(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) fail(ErrorKind::NotFound, path.string() + ": no such file");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, path.string() + ": cannot open");
  return in;
}

void require_c_order(const Header& h, const std::filesystem::path& path) {
  if (h.fortran_order) fail(ErrorKind::Format, path.string() + ": Fortran-order arrays are not supported");
}

}  // namespace

std::size_t Header::element_count() const {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Header read_header(std::istream& in) {
  char magic[kMagicLen];
  in.read(magic, kMagicLen);
  if (in.gcount() != static_cast<std::streamsize>(kMagicLen) ||
      std::memcmp(magic, kMagic, kMagicLen) != 0)
    fail(ErrorKind::Format, "not an npy file (bad magic)");

  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  if (in.gcount() != 2) fail(ErrorKind::Format, "npy header truncated");

  std::uint32_t header_len = 0;
  if (version[0] == 1) {
    unsigned char len[2];
    in.read(reinterpret_cast<char*>(len), 2);
    if (in.gcount() != 2) fail(ErrorKind::Format, "npy header truncated");
    header_len = len[0] | (len[1] << 8);
  } else if (version[0] == 2 || version[0] == 3) {
    unsigned char len[4];
    in.read(reinterpret_cast<char*>(len), 4);
    if (in.gcount() != 4) fail(ErrorKind::Format, "npy header truncated");
    header_len = len[0] | (len[1] << 8) | (len[2] << 16) |
                 (static_cast<std::uint32_t>(len[3]) << 24);
  } else {
    fail(ErrorKind::Format, "unsupported npy version " + std::to_string(version[0]));
  }

  std::string dict(header_len, '\0');
  in.read(dict.data(), header_len);
  if (in.gcount() != static_cast<std::streamsize>(header_len))
    fail(ErrorKind::Format, "npy header truncated");
  if (dict.find('{') == std::string::npos || dict.find('}') == std::string::npos)
    fail(ErrorKind::Format, "npy header is not a dict");

  Header h;
  const std::string descr = unquote(dict_value(dict, "descr"));
  if (descr == "<f4") {
    h.dtype = Dtype::Float32;
  } else if (descr == "<f8") {
    h.dtype = Dtype::Float64;
  } else {
    fail(ErrorKind::Format, "unsupported npy dtype '" + descr + "'");
  }

  std::string fortran = dict_value(dict, "fortran_order");
  while (!fortran.empty() && fortran.back() == ' ') fortran.pop_back();
  if (fortran == "False") {
    h.fortran_order = false;
  } else if (fortran == "True") {
    h.fortran_order = true;
  } else {
    fail(ErrorKind::Format, "npy header: bad fortran_order '" + fortran + "'");
  }

  h.shape = parse_shape(dict_value(dict, "shape"));
  return h;
}

std::vector<float> read_f32(const std::filesystem::path& path,
                            std::vector<std::size_t>& shape) {
  auto in = open_input(path);
  Header h;
  try {
    h = read_header(in);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
  require_c_order(h, path);
  if (h.dtype != Dtype::Float32)
    fail(ErrorKind::Format, path.string() + ": expected dtype <f4");
  shape = h.shape;
  return read_payload<float>(in, h.element_count());
}

std::vector<double> read_real(const std::filesystem::path& path,
                              std::vector<std::size_t>& shape) {
  auto in = open_input(path);
  Header h;
  try {
    h = read_header(in);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
  require_c_order(h, path);
  shape = h.shape;
  if (h.dtype == Dtype::Float64) return read_payload<double>(in, h.element_count());
  const auto f = read_payload<float>(in, h.element_count());
  return {f.begin(), f.end()};
}

void write_f32(const std::filesystem::path& path,
               std::span<const std::size_t> shape, std::span<const float> data) {
  std::size_t count = 1;
  for (auto s : shape) count *= s;
  if (count != data.size())
    fail(ErrorKind::Validation, "npy write: shape does not match data size");

  std::string dict = "{'descr': '<f4', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    dict += std::to_string(shape[i]);
    if (shape.size() == 1 || i + 1 < shape.size()) dict += ",";
    if (i + 1 < shape.size()) dict += " ";
  }
  dict += "), }";
  // magic(6) + version(2) + len(2) + dict + '\n' must be a multiple of 64.
  const std::size_t unpadded = kMagicLen + 2 + 2 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict += '\n';
  if (dict.size() > 0xFFFF) fail(ErrorKind::Validation, "npy header too long");

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, path.string() + ": cannot open for writing");
  out.write(kMagic, kMagicLen);
  const char version[2] = {1, 0};
  out.write(version, 2);
  const char len[2] = {static_cast<char>(dict.size() & 0xFF),
                       static_cast<char>((dict.size() >> 8) & 0xFF)};
  out.write(len, 2);
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!out) fail(ErrorKind::Io, path.string() + ": write failed");
}

}  // namespace d2d::npy
