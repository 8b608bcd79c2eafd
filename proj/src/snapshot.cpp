#include "gfflab/snapshot.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "gfflab/errors.hpp"

namespace gfflab {

namespace {

static_assert(std::endian::native == std::endian::little, "snapshot codec assumes a little-endian host");

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T) || pos_ > bytes_.size()) {
      std::ostringstream os;
      os << "truncated snapshot: need " << sizeof(T) << " bytes for " << what << " at byte offset " << pos_
         << ", file has " << bytes_.size();
      throw ParseError(os.str());
    }
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string encode_snapshot(const FieldSample& field) {
  const GridSpec& s = field.spec;
  std::string out;
  out.reserve(82 + 8 * static_cast<std::size_t>(s.size()));
  out.append("GFFM", 4);
  put<std::uint32_t>(out, kSnapshotVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.nx));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.ny));
  put<double>(out, s.spacing);
  put<double>(out, s.origin.x());
  put<double>(out, s.origin.y());
  put<std::uint64_t>(out, field.seed);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(field.kind));
  put<std::uint8_t>(out, field.pin ? 1 : 0);
  if (field.pin) {
    put<double>(out, field.pin->center.x());
    put<double>(out, field.pin->center.y());
    put<double>(out, field.pin->radius);
    put<double>(out, field.pin->subtracted);
  }
  const double* data = field.values.data();
  for (Index k = 0; k < s.size(); ++k) put<double>(out, data[k]);
  return out;
}

FieldSample decode_snapshot(std::string_view bytes) {
  if (bytes.size() < 4 || bytes.substr(0, 4) != "GFFM") throw ParseError("bad magic at byte offset 0: expected \"GFFM\"");
  Reader in(bytes.substr(0));
  in.get<std::uint32_t>("magic");
  const auto version = in.get<std::uint32_t>("version");
  if (version != kSnapshotVersion) {
    std::ostringstream os;
    os << "unsupported snapshot version " << version << " at byte offset 4 (this build reads version "
       << kSnapshotVersion << ")";
    throw ParseError(os.str());
  }
  FieldSample f;
  f.spec.nx = static_cast<int>(in.get<std::uint32_t>("nx"));
  f.spec.ny = static_cast<int>(in.get<std::uint32_t>("ny"));
  f.spec.spacing = in.get<double>("spacing");
  const double ox = in.get<double>("origin x");
  const double oy = in.get<double>("origin y");
  f.spec.origin = Point(ox, oy);
  try {
    f.spec.validate();
  } catch (const ConfigError& e) {
    throw ParseError(std::string("invalid grid header: ") + e.what());
  }
  f.seed = in.get<std::uint64_t>("seed");
  const std::size_t kind_offset = in.offset();
  const auto kind = in.get<std::uint8_t>("kind");
  if (kind > 2) {
    std::ostringstream os;
    os << "unknown field kind " << int(kind) << " at byte offset " << kind_offset;
    throw ParseError(os.str());
  }
  f.kind = static_cast<FieldKind>(kind);
  const std::size_t flag_offset = in.offset();
  const auto has_pin = in.get<std::uint8_t>("pin flag");
  if (has_pin > 1) {
    std::ostringstream os;
    os << "bad pin flag " << int(has_pin) << " at byte offset " << flag_offset;
    throw ParseError(os.str());
  }
  if (has_pin) {
    Pin p;
    const double cx = in.get<double>("pin centre x");
    const double cy = in.get<double>("pin centre y");
    p.center = Point(cx, cy);
    p.radius = in.get<double>("pin radius");
    p.subtracted = in.get<double>("pin subtracted value");
    f.pin = p;
  }
  const std::size_t need = 8 * static_cast<std::size_t>(f.spec.size());
  if (in.remaining() < need) {
    std::ostringstream os;
    os << "truncated snapshot payload at byte offset " << bytes.size() << ": expected " << need
       << " value bytes starting at offset " << in.offset() << ", found " << in.remaining();
    throw ParseError(os.str());
  }
  if (in.remaining() > need) {
    std::ostringstream os;
    os << "trailing bytes after snapshot payload at byte offset " << in.offset() + need;
    throw ParseError(os.str());
  }
  f.values.resize(f.spec.nx, f.spec.ny);
  double* data = f.values.data();
  for (Index k = 0; k < f.spec.size(); ++k) data[k] = in.get<double>("value");
  return f;
}

void save_snapshot(const FieldSample& field, const std::filesystem::path& path) {
  write_file(path, encode_snapshot(field));
}

FieldSample load_snapshot(const std::filesystem::path& path) { return decode_snapshot(read_file(path)); }

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string() + " for reading");
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ConfigError("write to " + path.string() + " failed");
}

}  // namespace gfflab
