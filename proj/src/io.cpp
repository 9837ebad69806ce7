#include "sphg/io.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>
#include <zlib.h>

#include "sphg/config.hpp"

namespace sphg {

namespace {

class Writer {
 public:
  void bytes(const char* p, std::size_t n) { out_.append(p, n); }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void f64(double d) { uint(std::bit_cast<std::uint64_t>(d)); }
  void finish() {
    const auto crc = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(out_.data()), static_cast<uInt>(out_.size())));
    uint(crc);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(const std::string& in) : in_(in) {
    if (in_.size() < 4) throw FormatError("file too short");
    end_ = in_.size() - 4;
    std::uint32_t stored = 0;
    for (int i = 0; i < 4; ++i) stored |= std::uint32_t(std::uint8_t(in_[end_ + i])) << (8 * i);
    const auto actual = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(in_.data()), static_cast<uInt>(end_)));
    if (stored != actual) throw FormatError("CRC32 mismatch: file is corrupted");
  }
  void need(std::size_t n) const {
    if (pos_ + n > end_) throw FormatError("unexpected end of file");
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(std::uint8_t(in_[pos_ + i])) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  bool done() const { return pos_ == end_; }

 private:
  const std::string& in_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
};

void write_header(Writer& w, const FileHeader& h) {
  w.bytes("SPHG", 4);
  w.uint<std::uint16_t>(kFormatVersion);
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(h.kind));
  w.uint(h.nlat);
  w.uint(h.nlon);
  w.uint(h.channels);
  w.uint(h.lmax);
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(h.grid));
}

FileHeader read_header(Reader& r, FileKind expected) {
  if (r.bytes(4) != "SPHG") throw FormatError("bad magic: not an SPHG file");
  const auto version = r.uint<std::uint16_t>();
  if (version != kFormatVersion) {
    throw FormatError("unsupported format version " + std::to_string(version));
  }
  FileHeader h;
  h.kind = static_cast<FileKind>(r.uint<std::uint8_t>());
  if (h.kind != expected) {
    throw FormatError("wrong file kind " + std::to_string(int(h.kind)) + ", expected " +
                      std::to_string(int(expected)));
  }
  h.nlat = r.uint<std::uint32_t>();
  h.nlon = r.uint<std::uint32_t>();
  h.channels = r.uint<std::uint32_t>();
  h.lmax = r.uint<std::uint32_t>();
  const auto g = r.uint<std::uint8_t>();
  if (g > 1) throw FormatError("unknown grid kind " + std::to_string(g));
  h.grid = static_cast<GridKind>(g);
  return h;
}

std::string file_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu.sphg", prefix, i);
  return buf;
}

}  // namespace

std::string encode_field(const Field<double>& f) {
  Writer w;
  FileHeader h;
  h.kind = FileKind::Field;
  h.nlat = static_cast<std::uint32_t>(f.nlat());
  h.nlon = static_cast<std::uint32_t>(f.nlon());
  h.channels = static_cast<std::uint32_t>(f.channels());
  h.lmax = static_cast<std::uint32_t>(f.grid().lmax);
  h.grid = f.grid().kind;
  write_header(w, h);
  const auto& v = f.values();
  for (Eigen::Index c = 0; c < v.rows(); ++c) {
    for (Eigen::Index k = 0; k < v.cols(); ++k) w.f64(v(c, k));
  }
  w.finish();
  return w.take();
}

Field<double> decode_field(const std::string& bytes) {
  Reader r(bytes);
  const FileHeader h = read_header(r, FileKind::Field);
  GridPtr grid;
  try {
    grid = make_grid(static_cast<int>(h.nlat), static_cast<int>(h.nlon), h.grid);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("invalid grid in header: ") + e.what());
  }
  if (h.channels == 0) throw FormatError("field has no channels");
  r.need(std::size_t(h.channels) * grid->num_points() * 8);
  Field<double> f(grid, static_cast<int>(h.channels));
  for (Eigen::Index c = 0; c < f.values().rows(); ++c) {
    for (Eigen::Index k = 0; k < f.values().cols(); ++k) f.values()(c, k) = r.f64();
  }
  if (!r.done()) throw FormatError("trailing bytes after field samples");
  return f;
}

void write_field(const std::filesystem::path& path, const Field<double>& f) {
  write_file(path, encode_field(f));
}

Field<double> read_field(const std::filesystem::path& path) {
  try {
    return decode_field(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  FileHeader h = ckpt.header;
  h.kind = FileKind::Checkpoint;
  write_header(w, h);
  w.uint(static_cast<std::uint32_t>(ckpt.config.size()));
  w.bytes(ckpt.config.data(), ckpt.config.size());
  w.uint(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    if (t.name.size() > 0xFFFF) throw FormatError("tensor name too long: " + t.name);
    w.uint(static_cast<std::uint16_t>(t.name.size()));
    w.bytes(t.name.data(), t.name.size());
    w.uint(static_cast<std::uint64_t>(t.values.size()));
    for (double v : t.values) w.f64(v);
  }
  w.finish();
  return w.take();
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  Checkpoint ck;
  ck.header = read_header(r, FileKind::Checkpoint);
  ck.config = r.bytes(r.uint<std::uint32_t>());
  const auto count = r.uint<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.bytes(r.uint<std::uint16_t>());
    const auto n = r.uint<std::uint64_t>();
    r.need(n * 8);
    t.values.resize(n);
    for (auto& v : t.values) v = r.f64();
    ck.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError("trailing bytes after checkpoint tensors");
  return ck;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 digest failed");
  }
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return os.str();
}

std::string task_spec_to_text(const TaskSpec& s) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "task=" << to_string(s.kind) << "\n"
     << "lmax=" << s.lmax << "\n"
     << "n=" << s.n << "\n"
     << "channels=" << s.channels << "\n"
     << "slope=" << s.slope << "\n"
     << "seed=" << s.seed << "\n"
     << "nlat=" << s.nlat << "\n"
     << "nlon=" << s.nlon << "\n"
     << "grid=" << to_string(s.grid) << "\n"
     << "terrain=" << to_string(s.terrain) << "\n"
     << "terrain_seed=" << s.terrain_seed << "\n"
     << "terrain_lmax=" << s.terrain_lmax << "\n";
  return os.str();
}

TaskSpec task_spec_from_text(const std::string& text) {
  const Config c = Config::parse(text);
  TaskSpec s;
  s.kind = task_kind_from_string(c.get_string("task"));
  s.lmax = static_cast<int>(c.get_int("lmax"));
  s.n = static_cast<int>(c.get_int("n"));
  s.channels = static_cast<int>(c.get_int("channels"));
  s.slope = c.get_double("slope");
  s.seed = static_cast<std::uint64_t>(c.get_int("seed"));
  s.nlat = static_cast<int>(c.get_int("nlat"));
  s.nlon = static_cast<int>(c.get_int("nlon"));
  s.grid = grid_kind_from_string(c.get_string("grid"));
  s.terrain = terrain_kind_from_string(c.get_string("terrain"));
  s.terrain_seed = static_cast<std::uint64_t>(c.get_int("terrain_seed"));
  s.terrain_lmax = static_cast<int>(c.get_int("terrain_lmax"));
  return s;
}

std::vector<std::filesystem::path> save_dataset(const std::filesystem::path& dir,
                                                const FieldDataset& ds) {
  ds.validate();
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::filesystem::path& p, const std::string& bytes) {
    write_file(p, bytes);
    written.push_back(p);
  };
  TaskSpec meta = ds.meta;
  meta.n = static_cast<int>(ds.size());
  put(dir / "dataset.txt", task_spec_to_text(meta));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    put(dir / file_name("x", i), encode_field(ds.inputs[i]));
    put(dir / file_name("y", i), encode_field(ds.targets[i]));
  }
  if (ds.terrain) put(dir / "terrain.sphg", encode_field(*ds.terrain));
  return written;
}

FieldDataset load_dataset(const std::filesystem::path& dir) {
  FieldDataset ds;
  ds.meta = task_spec_from_text(read_file(dir / "dataset.txt"));
  for (int i = 0; i < ds.meta.n; ++i) {
    ds.inputs.push_back(read_field(dir / file_name("x", static_cast<std::size_t>(i))));
    ds.targets.push_back(read_field(dir / file_name("y", static_cast<std::size_t>(i))));
  }
  if (std::filesystem::exists(dir / "terrain.sphg")) ds.terrain = read_field(dir / "terrain.sphg");
  if (!ds.inputs.empty()) {
    ds.symbol = SpectralSymbol::inverse_laplacian(ds.inputs.front().grid().lmax);
  }
  ds.validate();
  return ds;
}

}  // namespace sphg
