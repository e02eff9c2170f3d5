#pragma once

// Image grids, CT volumes and lesion label sets, plus the MVOL / MMASK
// on-disk formats:
//
//   MVOL 1
//   dims <nx> <ny> <nz>
//   spacing <sx> <sy> <sz>
//   origin <ox> <oy> <oz>
//   data float32 le
//   <raw little-endian float32 payload, x fastest>
//
// MMASK files use the magic "MMASK 1", carry one "lesion <id> <site>" line per
// label after the origin line, end the header with "data uint8 le", and store
// a uint8 label map (0 = background, k = k-th lesion line).

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "radrobust/error.hpp"
#include "radrobust/log.hpp"
#include "radrobust/text.hpp"

namespace radrobust {

using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

struct Grid {
  Index3 dims{1, 1, 1};
  Vec3 spacing{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) + static_cast<std::size_t>(dims[0]) *
                                             (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims[1]) * z);
  }
  Index3 coords(std::size_t i) const {
    const int x = static_cast<int>(i % dims[0]);
    const std::size_t r = i / dims[0];
    return {x, static_cast<int>(r % dims[1]), static_cast<int>(r / dims[1])};
  }
  bool contains(int x, int y, int z) const {
    return x >= 0 && y >= 0 && z >= 0 && x < dims[0] && y < dims[1] && z < dims[2];
  }
  double voxel_volume() const { return spacing[0] * spacing[1] * spacing[2]; }

  void validate() const {
    for (int a = 0; a < 3; ++a) {
      if (dims[a] < 1) throw format_error("nonpositive dims");
      if (!(spacing[a] > 0.0)) throw format_error("nonpositive spacing");
    }
  }

  friend bool operator==(const Grid&, const Grid&) = default;
};

struct VoxelVolume {
  Grid grid;
  std::vector<float> data;  // Hounsfield units, x fastest

  float at(int x, int y, int z) const { return data[grid.index(x, y, z)]; }

  void validate() const {
    grid.validate();
    if (data.size() != grid.size()) throw truncation_error("volume payload length does not match dims");
  }
};

/// Binary mask over a grid.
struct Mask {
  Grid grid;
  std::vector<std::uint8_t> bits;

  Mask() = default;
  explicit Mask(Grid g) : grid(g), bits(g.size(), 0) {}

  bool at(int x, int y, int z) const { return bits[grid.index(x, y, z)] != 0; }
  std::size_t count() const {
    std::size_t n = 0;
    for (auto b : bits) n += b != 0;
    return n;
  }
  bool empty() const { return count() == 0; }
  double physical_volume() const { return static_cast<double>(count()) * grid.voxel_volume(); }

  friend bool operator==(const Mask&, const Mask&) = default;
};

enum class Site { omentum, pelvis, other };

inline std::string to_string(Site s) {
  switch (s) {
    case Site::omentum: return "omentum";
    case Site::pelvis: return "pelvis";
    case Site::other: return "other";
  }
  return "other";
}

inline Site parse_site(std::string_view s) {
  if (s == "omentum") return Site::omentum;
  if (s == "pelvis") return Site::pelvis;
  if (s == "other") return Site::other;
  throw format_error("unknown site '" + std::string(s) + "'");
}

struct Lesion {
  std::string id;
  Site site = Site::other;
  Mask mask;
};

struct LesionSet {
  Grid grid;
  std::vector<Lesion> lesions;

  /// Checks nonempty masks and shared geometry. Overlaps are reported through
  /// the log and otherwise tolerated; downstream merging uses union semantics.
  void validate() const {
    grid.validate();
    std::vector<std::uint8_t> seen(grid.size(), 0);
    bool overlap = false;
    for (const auto& l : lesions) {
      if (!(l.mask.grid == grid)) throw geometry_error("lesion '" + l.id + "' grid differs from its set");
      if (l.mask.bits.size() != grid.size()) throw truncation_error("lesion '" + l.id + "' mask size mismatch");
      if (l.mask.empty()) throw DataError("empty-mask", "lesion '" + l.id + "' has no voxels");
      for (std::size_t i = 0; i < seen.size(); ++i) {
        if (l.mask.bits[i]) {
          overlap = overlap || seen[i];
          seen[i] = 1;
        }
      }
    }
    if (overlap) log::warn("lesion masks overlap; treating them as a union downstream");
  }
};

namespace detail {

inline std::string read_line(std::istream& in, int lineno, const std::string& path) {
  std::string line;
  if (!std::getline(in, line)) {
    throw format_error(path + ": line " + std::to_string(lineno) + ": unexpected end of header");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

inline Vec3 parse_vec3(const std::string& line, std::string_view key, int lineno, const std::string& path) {
  const auto tok = text::tokens(line);
  if (tok.size() != 4 || tok[0] != key) {
    throw format_error(path + ": line " + std::to_string(lineno) + ": expected '" + std::string(key) +
                       " <a> <b> <c>', got '" + line + "'");
  }
  Vec3 v{};
  for (int a = 0; a < 3; ++a) {
    auto d = text::parse_double(tok[a + 1]);
    if (!d || !std::isfinite(*d)) {
      throw format_error(path + ": line " + std::to_string(lineno) + ": bad number '" + std::string(tok[a + 1]) + "'");
    }
    v[a] = *d;
  }
  return v;
}

inline Grid read_grid_header(std::istream& in, const std::string& path) {
  Grid g;
  const std::string dims_line = read_line(in, 2, path);
  const auto tok = text::tokens(dims_line);
  if (tok.size() != 4 || tok[0] != "dims") {
    throw format_error(path + ": line 2: expected 'dims <nx> <ny> <nz>', got '" + dims_line + "'");
  }
  for (int a = 0; a < 3; ++a) {
    auto n = text::parse_int<int>(tok[a + 1]);
    if (!n) throw format_error(path + ": line 2: bad integer '" + std::string(tok[a + 1]) + "'");
    g.dims[a] = *n;
  }
  g.spacing = parse_vec3(read_line(in, 3, path), "spacing", 3, path);
  g.origin = parse_vec3(read_line(in, 4, path), "origin", 4, path);
  for (int a = 0; a < 3; ++a) {
    if (g.dims[a] < 1) throw format_error(path + ": line 2: nonpositive dims");
    if (!(g.spacing[a] > 0.0)) throw format_error(path + ": line 3: nonpositive spacing");
  }
  return g;
}

inline void write_grid_header(std::ostream& out, std::string_view magic, const Grid& g) {
  out << magic << "\n";
  out << "dims " << g.dims[0] << ' ' << g.dims[1] << ' ' << g.dims[2] << "\n";
  out << "spacing " << text::format_double(g.spacing[0]) << ' ' << text::format_double(g.spacing[1]) << ' '
      << text::format_double(g.spacing[2]) << "\n";
  out << "origin " << text::format_double(g.origin[0]) << ' ' << text::format_double(g.origin[1]) << ' '
      << text::format_double(g.origin[2]) << "\n";
}

inline std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("io", "cannot open " + path.string());
  return in;
}

inline std::string read_rest(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

}  // namespace detail

inline VoxelVolume read_volume(std::istream& in, const std::string& name = "<stream>") {
  const std::string magic = detail::read_line(in, 1, name);
  if (text::trim(magic) != "MVOL 1") throw format_error(name + ": line 1: expected 'MVOL 1', got '" + magic + "'");
  VoxelVolume vol;
  vol.grid = detail::read_grid_header(in, name);
  const std::string data_line = detail::read_line(in, 5, name);
  if (text::tokens(data_line) != std::vector<std::string_view>{"data", "float32", "le"}) {
    throw format_error(name + ": line 5: expected 'data float32 le', got '" + data_line + "'");
  }
  const std::string payload = detail::read_rest(in);
  const std::size_t n = vol.grid.size();
  if (payload.size() != n * sizeof(float)) {
    throw truncation_error(name + ": payload has " + std::to_string(payload.size()) + " bytes, expected " +
                           std::to_string(n * sizeof(float)));
  }
  vol.data.resize(n);
  static_assert(std::endian::native == std::endian::little, "big-endian hosts need byte swapping here");
  std::memcpy(vol.data.data(), payload.data(), payload.size());
  return vol;
}

inline VoxelVolume load_volume(const std::filesystem::path& path) {
  auto in = detail::open_binary(path);
  return read_volume(in, path.string());
}

inline void write_volume(std::ostream& out, const VoxelVolume& vol) {
  vol.validate();
  detail::write_grid_header(out, "MVOL 1", vol.grid);
  out << "data float32 le\n";
  out.write(reinterpret_cast<const char*>(vol.data.data()),
            static_cast<std::streamsize>(vol.data.size() * sizeof(float)));
}

inline void write_volume(const VoxelVolume& vol, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("io", "cannot write " + path.string());
  write_volume(out, vol);
}

inline LesionSet read_lesions(std::istream& in, const std::string& name = "<stream>") {
  const std::string magic = detail::read_line(in, 1, name);
  if (text::trim(magic) != "MMASK 1") throw format_error(name + ": line 1: expected 'MMASK 1', got '" + magic + "'");
  LesionSet set;
  set.grid = detail::read_grid_header(in, name);
  int lineno = 5;
  while (true) {
    const std::string line = detail::read_line(in, lineno, name);
    const auto tok = text::tokens(line);
    if (tok.size() == 3 && tok[0] == "data") {
      if (tok[1] != "uint8" || tok[2] != "le") {
        throw format_error(name + ": line " + std::to_string(lineno) + ": expected 'data uint8 le'");
      }
      break;
    }
    if (tok.size() != 3 || tok[0] != "lesion") {
      throw format_error(name + ": line " + std::to_string(lineno) + ": expected 'lesion <id> <site>', got '" + line + "'");
    }
    Site site;
    try {
      site = parse_site(tok[2]);
    } catch (const DataError&) {
      throw format_error(name + ": line " + std::to_string(lineno) + ": unknown site '" + std::string(tok[2]) + "'");
    }
    for (const auto& l : set.lesions) {
      if (l.id == tok[1]) throw format_error(name + ": line " + std::to_string(lineno) + ": duplicate lesion id");
    }
    if (set.lesions.size() == 255) throw format_error(name + ": more than 255 lesions");
    set.lesions.push_back({std::string(tok[1]), site, Mask(set.grid)});
    ++lineno;
  }
  const std::string payload = detail::read_rest(in);
  const std::size_t n = set.grid.size();
  if (payload.size() != n) {
    throw truncation_error(name + ": payload has " + std::to_string(payload.size()) + " bytes, expected " +
                           std::to_string(n));
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto label = static_cast<std::uint8_t>(payload[i]);
    if (label == 0) continue;
    if (label > set.lesions.size()) {
      throw format_error(name + ": label " + std::to_string(label) + " has no lesion line");
    }
    set.lesions[label - 1].mask.bits[i] = 1;
  }
  set.validate();
  return set;
}

inline LesionSet load_lesions(const std::filesystem::path& path) {
  auto in = detail::open_binary(path);
  return read_lesions(in, path.string());
}

/// Overlapping voxels are written with the later lesion's label.
inline void write_lesions(std::ostream& out, const LesionSet& set) {
  set.validate();
  if (set.lesions.size() > 255) throw format_error("more than 255 lesions");
  detail::write_grid_header(out, "MMASK 1", set.grid);
  for (const auto& l : set.lesions) {
    if (l.id.empty() || text::tokens(l.id).size() != 1) throw format_error("lesion id must be a single token");
    out << "lesion " << l.id << ' ' << to_string(l.site) << "\n";
  }
  out << "data uint8 le\n";
  std::string payload(set.grid.size(), '\0');
  for (std::size_t k = 0; k < set.lesions.size(); ++k) {
    const auto& bits = set.lesions[k].mask.bits;
    for (std::size_t i = 0; i < bits.size(); ++i) {
      if (bits[i]) payload[i] = static_cast<char>(k + 1);
    }
  }
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
}

inline void write_lesions(const LesionSet& set, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("io", "cannot write " + path.string());
  write_lesions(out, set);
}

/// Loads a volume and its lesion file and checks the pair shares one grid.
/// Never resamples.
inline std::pair<VoxelVolume, LesionSet> load_pair(const std::filesystem::path& volume_path,
                                                   const std::filesystem::path& mask_path) {
  auto vol = load_volume(volume_path);
  auto les = load_lesions(mask_path);
  if (!(vol.grid == les.grid)) {
    throw geometry_error("grid of " + mask_path.string() + " does not match " + volume_path.string());
  }
  return {std::move(vol), std::move(les)};
}

}  // namespace radrobust
