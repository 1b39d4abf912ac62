#include "rtf/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "rtf/core.hpp"

namespace rtf {

namespace {

constexpr const char* kMagic = "RTF-CHECKPOINT";

void put_f64(std::ostream& out, double v) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &v, sizeof bits);
  char bytes[8];
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes, 8);
}

double get_f64(std::istream& in) {
  unsigned char bytes[8];
  if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw DataError("checkpoint: truncated data");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  double v = 0;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

std::vector<std::string> read_fields(std::istream& in, const char* what) {
  std::string line;
  if (!std::getline(in, line)) throw DataError(std::string("checkpoint: missing ") + what);
  std::vector<std::string> fields;
  std::istringstream ls(line);
  std::string f;
  while (std::getline(ls, f, '\t')) fields.push_back(f);
  return fields;
}

std::size_t section_count(std::istream& in, const char* name) {
  const auto fields = read_fields(in, name);
  if (fields.size() != 2 || fields[0] != name)
    throw DataError(std::string("checkpoint: expected '") + name + "' section");
  return static_cast<std::size_t>(std::stoull(fields[1]));
}

}  // namespace

const std::string* Checkpoint::find_meta(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  out << kMagic << '\t' << kCheckpointVersion << '\n';
  out << "meta\t" << ckpt.meta.size() << '\n';
  for (const auto& [k, v] : ckpt.meta) out << k << '\t' << v << '\n';
  out << "vocab\t" << ckpt.vocab.size() << '\n';
  for (const auto& tok : ckpt.vocab) out << tok << '\n';
  out << "params\t" << ckpt.params.size() << '\n';
  for (const auto& e : ckpt.params) {
    out << e.name << '\t' << e.value.rank();
    for (auto d : e.value.shape()) out << '\t' << d;
    out << '\n';
  }
  out << "data\t" << ckpt.params.scalar_count() << '\n';
  for (const auto& e : ckpt.params)
    for (real v : e.value.values()) put_f64(out, static_cast<double>(v));
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  const auto head = read_fields(in, "header");
  if (head.size() != 2 || head[0] != kMagic) throw DataError("checkpoint: bad magic line");
  if (head[1] != std::to_string(kCheckpointVersion))
    throw DataError("checkpoint: unsupported format version " + head[1]);

  Checkpoint ckpt;
  const std::size_t n_meta = section_count(in, "meta");
  for (std::size_t i = 0; i < n_meta; ++i) {
    const auto f = read_fields(in, "meta entry");
    if (f.size() != 2) throw DataError("checkpoint: bad meta entry");
    ckpt.meta.emplace_back(f[0], f[1]);
  }
  const std::size_t n_vocab = section_count(in, "vocab");
  for (std::size_t i = 0; i < n_vocab; ++i) {
    std::string tok;
    if (!std::getline(in, tok)) throw DataError("checkpoint: truncated vocabulary");
    ckpt.vocab.push_back(tok);
  }
  const std::size_t n_params = section_count(in, "params");
  std::vector<std::pair<std::string, Shape>> manifest;
  for (std::size_t i = 0; i < n_params; ++i) {
    const auto f = read_fields(in, "manifest entry");
    if (f.size() < 2) throw DataError("checkpoint: bad manifest entry");
    const std::size_t rank = std::stoull(f[1]);
    if (f.size() != 2 + rank) throw DataError("checkpoint: bad shape for " + f[0]);
    Shape shape;
    for (std::size_t r = 0; r < rank; ++r) shape.push_back(std::stoull(f[2 + r]));
    manifest.emplace_back(f[0], shape);
  }
  const std::size_t total = section_count(in, "data");
  std::size_t expected = 0;
  for (const auto& [name, shape] : manifest) expected += shape_size(shape);
  if (total != expected) throw DataError("checkpoint: data count does not match manifest");
  for (const auto& [name, shape] : manifest) {
    Tensor t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<real>(get_f64(in));
    ckpt.params.add(name, std::move(t));
  }
  return ckpt;
}

void write_atomically(const std::filesystem::path& path,
                      const std::function<void(std::ostream&)>& body, bool binary) {
  std::filesystem::path partial = path;
  partial += ".partial";
  {
    std::ofstream out(partial, binary ? std::ios::binary : std::ios::out);
    if (!out) throw std::runtime_error("cannot open " + partial.string() + " for writing");
    body(out);
    out.flush();
    if (!out) throw std::runtime_error("write to " + partial.string() + " failed");
  }
  std::filesystem::rename(partial, path);
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_atomically(path, [&](std::ostream& out) { write_checkpoint(out, ckpt); }, true);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

}  // namespace rtf
