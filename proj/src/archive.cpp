#include "lindopt/archive.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include <json.hpp>

#include "lindopt/errors.hpp"

static_assert(std::endian::native == std::endian::little, "archive assumes a little-endian host");

namespace lindopt::archive {

namespace {

constexpr char kMagic[4] = {'L', 'R', 'I', 'A'};

template <typename T>
void put(std::vector<unsigned char>& out, const T& value) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(&value);
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

template <typename T>
T take(const std::vector<unsigned char>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw IoError("archive: truncated file");
  T value;
  std::memcpy(&value, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

void atomic_write(const std::filesystem::path& path, const void* data, std::size_t size) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("archive: cannot open " + tmp.string());
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
    if (!out) throw IoError("archive: short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("archive: rename failed for " + path.string());
}

}  // namespace

std::uint64_t fnv1a(const unsigned char* data, std::size_t size) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (std::size_t i = 0; i < size; ++i) {
    hash ^= data[i];
    hash *= 1099511628211ULL;
  }
  return hash;
}

void save(const IsometryArchive& arc, const std::filesystem::path& path) {
  const auto& layers = arc.isometries.layers;
  if (layers.empty()) throw std::invalid_argument("archive::save: empty isometry list");
  const Index n = layers.front().rows(), p = layers.front().cols();

  std::vector<unsigned char> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put(buf, arc.header.version);
  std::uint32_t model_id = arc.header.model == "pspl" ? 1u : 0u;
  put(buf, model_id);
  put(buf, arc.header.tau);
  put(buf, arc.header.n_tau);
  put(buf, arc.header.sites);
  put(buf, arc.header.local_dim);
  put(buf, arc.header.rank);
  put(buf, arc.header.layers);
  put(buf, arc.header.alpha0);
  put(buf, arc.header.alpha1);
  put(buf, static_cast<std::uint64_t>(n));
  put(buf, static_cast<std::uint64_t>(p));
  for (const auto& layer : layers) {
    if (layer.rows() != n || layer.cols() != p) throw std::invalid_argument("archive::save: ragged layer shapes");
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) put(buf, layer.matrix(i, j));
  }
  atomic_write(path, buf.data(), buf.size());

  nlohmann::ordered_json side;
  side["format"] = "lindopt-isometries";
  side["version"] = arc.header.version;
  side["model"] = arc.header.model;
  side["tau"] = arc.header.tau;
  side["n_tau"] = arc.header.n_tau;
  side["sites"] = arc.header.sites;
  side["local_dim"] = arc.header.local_dim;
  side["rank"] = arc.header.rank;
  side["layers"] = arc.header.layers;
  side["alpha0"] = arc.header.alpha0;
  side["alpha1"] = arc.header.alpha1;
  side["rows"] = n;
  side["cols"] = p;
  char checksum[32];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(fnv1a(buf.data(), buf.size())));
  side["checksum_fnv1a"] = checksum;
  const std::string text = side.dump(2) + "\n";
  atomic_write(path.string() + ".json", text.data(), text.size());
}

IsometryArchive load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("archive: cannot open " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0) throw IoError("archive: bad magic");
  pos = 4;

  IsometryArchive arc;
  arc.header.version = take<std::uint32_t>(buf, pos);
  arc.header.model = take<std::uint32_t>(buf, pos) == 1u ? "pspl" : "kitaev";
  arc.header.tau = take<double>(buf, pos);
  arc.header.n_tau = take<std::uint32_t>(buf, pos);
  arc.header.sites = take<std::uint32_t>(buf, pos);
  arc.header.local_dim = take<std::uint32_t>(buf, pos);
  arc.header.rank = take<std::uint32_t>(buf, pos);
  arc.header.layers = take<std::uint32_t>(buf, pos);
  arc.header.alpha0 = take<double>(buf, pos);
  arc.header.alpha1 = take<double>(buf, pos);
  const auto n = static_cast<Index>(take<std::uint64_t>(buf, pos));
  const auto p = static_cast<Index>(take<std::uint64_t>(buf, pos));

  arc.isometries.schedule = splitting::layer_schedule(static_cast<int>(arc.header.n_tau));
  if (arc.isometries.schedule.layer_count() != static_cast<int>(arc.header.layers))
    throw IoError("archive: layer count does not match n_tau");
  for (std::uint32_t l = 0; l < arc.header.layers; ++l) {
    Matrix mat(n, p);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < p; ++j) mat(i, j) = take<double>(buf, pos);
    arc.isometries.layers.push_back(StiefelPoint{std::move(mat)});
  }
  if (pos != buf.size()) throw IoError("archive: trailing bytes");
  return arc;
}

}  // namespace lindopt::archive
