#include "slicescout/stack_io.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "byteio.hpp"
#include "csv.hpp"

namespace slicescout {

namespace {

constexpr std::string_view kEncoding = "float64-le-row-major";

std::vector<unsigned char> plane_bytes(const PlaneXd& pixels) {
  std::vector<unsigned char> out;
  out.reserve(pixels.size() * sizeof(double));
  for (Eigen::Index i = 0; i < pixels.size(); ++i) detail::store_le(out, pixels.data()[i]);
  return out;
}

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1)
      throw Error(ErrorKind::io, "cannot initialise SHA-256");
  }
  ~Sha256() { EVP_MD_CTX_free(ctx_); }
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::span<const unsigned char> bytes) { EVP_DigestUpdate(ctx_, bytes.data(), bytes.size()); }

  std::string hex_digest() {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, digest, &len);
    std::string hex;
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
    return hex;
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string slice_file_name(int index) { return fmt::format("slice_{:04d}.f64", index); }

}  // namespace

std::string content_hash(const SelectedStack& stack) {
  Sha256 sha;
  for (const auto& s : stack.slices) {
    std::vector<unsigned char> head;
    detail::store_le(head, static_cast<std::uint32_t>(s.index));
    detail::store_le(head, static_cast<std::uint32_t>(s.width()));
    detail::store_le(head, static_cast<std::uint32_t>(s.height()));
    sha.update(head);
    sha.update(plane_bytes(s.pixels));
  }
  return "sha256:" + sha.hex_digest();
}

StackManifest write_stack(const std::filesystem::path& dir, const SelectedStack& stack,
                          std::vector<std::pair<std::string, std::string>> parameters) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::io, fmt::format("cannot create {}: {}", dir.string(), ec.message()));

  StackManifest m;
  m.subject_id = stack.subject_id;
  m.window = stack.window;
  m.roi = stack.roi;
  m.plane_width = stack.slices.empty() ? 0 : stack.slices.front().width();
  m.plane_height = stack.slices.empty() ? 0 : stack.slices.front().height();
  m.parameters = std::move(parameters);
  for (const auto& s : stack.slices) {
    const auto name = slice_file_name(s.index);
    detail::write_file_bytes((dir / name).string(), plane_bytes(s.pixels));
    m.slice_files.emplace_back(s.index, name);
  }
  m.content_hash = content_hash(stack);

  std::ostringstream out;
  out << "# slicescout selected stack\n";
  out << "format=1\n";
  out << "subject_id=" << m.subject_id << '\n';
  out << "method=" << to_string(m.window.method) << '\n';
  out << "selection=" << (m.window.contiguous ? "contiguous" : "top_k") << '\n';
  out << "start=" << m.window.start << '\n';
  out << "length=" << m.window.length << '\n';
  out << fmt::format("total_score={}\n", m.window.total_score);
  out << fmt::format("roi={},{},{},{}\n", m.roi.min_x, m.roi.min_y, m.roi.max_x, m.roi.max_y);
  out << "plane_width=" << m.plane_width << '\n';
  out << "plane_height=" << m.plane_height << '\n';
  out << "plane_encoding=" << kEncoding << '\n';
  for (const auto& [key, value] : m.parameters) out << "param." << key << '=' << value << '\n';
  for (const auto& [index, file] : m.slice_files) out << "slice=" << index << ',' << file << '\n';
  out << "content_hash=" << m.content_hash << '\n';

  const std::string text = out.str();
  detail::write_file_bytes((dir / "manifest.txt").string(),
                           std::span(reinterpret_cast<const unsigned char*>(text.data()), text.size()));
  return m;
}

StackManifest read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.txt";
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::io, fmt::format("cannot open {}", path.string()));
  StackManifest m;
  m.window.contiguous = true;
  std::string line;
  int line_no = 0;
  auto fail = [&](std::string_view why) {
    return Error(ErrorKind::format, fmt::format("{}:{}: {}", path.string(), line_no, why));
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto text = detail::trim(line);
    if (text.empty() || text.front() == '#') continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw fail("expected key=value");
    const std::string key(text.substr(0, eq));
    const std::string value(text.substr(eq + 1));
    if (key == "format") {
      if (value != "1") throw fail("unsupported manifest format");
    } else if (key == "subject_id") {
      m.subject_id = value;
    } else if (key == "method") {
      m.window.method = parse_profile_kind(value);
    } else if (key == "selection") {
      m.window.contiguous = value == "contiguous";
    } else if (key == "start") {
      m.window.start = static_cast<int>(detail::parse_int(value, key));
    } else if (key == "length") {
      m.window.length = static_cast<int>(detail::parse_int(value, key));
    } else if (key == "total_score") {
      m.window.total_score = detail::parse_double(value, key);
    } else if (key == "roi") {
      const auto f = detail::split_csv_line(value);
      if (f.size() != 4) throw fail("roi needs four values");
      m.roi = {static_cast<int>(detail::parse_int(f[0], key)), static_cast<int>(detail::parse_int(f[1], key)),
               static_cast<int>(detail::parse_int(f[2], key)), static_cast<int>(detail::parse_int(f[3], key))};
    } else if (key == "plane_width") {
      m.plane_width = static_cast<int>(detail::parse_int(value, key));
    } else if (key == "plane_height") {
      m.plane_height = static_cast<int>(detail::parse_int(value, key));
    } else if (key == "plane_encoding") {
      if (value != kEncoding) throw fail("unsupported plane encoding");
    } else if (key.starts_with("param.")) {
      m.parameters.emplace_back(key.substr(6), value);
    } else if (key == "slice") {
      const auto f = detail::split_csv_line(value);
      if (f.size() != 2) throw fail("slice needs index,file");
      m.slice_files.emplace_back(static_cast<int>(detail::parse_int(f[0], key)), f[1]);
    } else if (key == "content_hash") {
      m.content_hash = value;
    } else {
      throw fail(fmt::format("unknown key '{}'", key));
    }
  }
  for (const auto& [index, file] : m.slice_files) m.window.indices.push_back(index);
  if (static_cast<int>(m.slice_files.size()) != m.window.length)
    throw Error(ErrorKind::format, fmt::format("{}: slice count disagrees with length", path.string()));
  return m;
}

SelectedStack read_stack(const std::filesystem::path& dir) {
  const StackManifest m = read_manifest(dir);
  SelectedStack stack{m.subject_id, m.window, {}, m.roi};
  const std::size_t plane_size = static_cast<std::size_t>(m.plane_width) * m.plane_height;
  for (const auto& [index, file] : m.slice_files) {
    const auto bytes = detail::read_file_bytes((dir / file).string());
    if (bytes.size() != plane_size * sizeof(double))
      throw Error(ErrorKind::corruption, fmt::format("{}: unexpected plane size", (dir / file).string()));
    PlaneXd pixels(m.plane_height, m.plane_width);
    for (std::size_t i = 0; i < plane_size; ++i)
      pixels.data()[i] = detail::load<double>(bytes.data() + i * sizeof(double));
    stack.slices.push_back(Slice2D{std::move(pixels), index});
  }
  if (content_hash(stack) != m.content_hash)
    throw Error(ErrorKind::corruption, fmt::format("{}: content hash mismatch", dir.string()));
  return stack;
}

}  // namespace slicescout
