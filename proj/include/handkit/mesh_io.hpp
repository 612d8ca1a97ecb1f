#pragma once

// STL (binary and ASCII) and Wavefront OBJ reading and writing.
//
// STL stores every facet corner separately, so corners are welded on read:
// two corners closer than kWeldTolerance become one vertex. OBJ keeps its
// own indexing; only `v` and `f` records are interpreted.

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "handkit/mesh.hpp"

namespace handkit {

enum class MeshFormat { stl_binary, stl_ascii, obj, automatic };

inline constexpr double kWeldTolerance = 1e-6;

inline const char* to_string(MeshFormat format) {
  switch (format) {
    case MeshFormat::stl_binary: return "stl_binary";
    case MeshFormat::stl_ascii: return "stl_ascii";
    case MeshFormat::obj: return "obj";
    case MeshFormat::automatic: return "auto";
  }
  return "auto";
}

inline MeshFormat mesh_format_from_string(std::string_view name) {
  if (name == "stl_binary") return MeshFormat::stl_binary;
  if (name == "stl_ascii") return MeshFormat::stl_ascii;
  if (name == "obj") return MeshFormat::obj;
  if (name == "auto") return MeshFormat::automatic;
  throw Error(ErrorKind::InvalidArgument, "unknown mesh format '" + std::string(name) + "'");
}

namespace detail {

/// Merges points within kWeldTolerance using a hashed grid of that cell size.
class Welder {
 public:
  explicit Welder(TriangleMesh& mesh) : mesh_(mesh) {}

  std::uint32_t insert(const Vec3& p) {
    const std::array<std::int64_t, 3> cell = cell_of(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid_.find(Key{cell[0] + dx, cell[1] + dy, cell[2] + dz});
          if (it == grid_.end()) continue;
          for (auto idx : it->second) {
            if ((mesh_.vertices[idx] - p).norm() <= kWeldTolerance) return idx;
          }
        }
      }
    }
    const auto idx = static_cast<std::uint32_t>(mesh_.vertices.size());
    mesh_.vertices.push_back(p);
    grid_[Key{cell[0], cell[1], cell[2]}].push_back(idx);
    return idx;
  }

 private:
  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept {
      std::uint64_t h = static_cast<std::uint64_t>(k.x) * 0x9E3779B97F4A7C15ull;
      h ^= static_cast<std::uint64_t>(k.y) + 0x7F4A7C159E3779B9ull + (h << 6) + (h >> 2);
      h ^= static_cast<std::uint64_t>(k.z) + 0x94D049BB133111EBull + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h);
    }
  };

  static std::array<std::int64_t, 3> cell_of(const Vec3& p) {
    return {static_cast<std::int64_t>(std::floor(p.x() / kWeldTolerance)),
            static_cast<std::int64_t>(std::floor(p.y() / kWeldTolerance)),
            static_cast<std::int64_t>(std::floor(p.z() / kWeldTolerance))};
  }

  TriangleMesh& mesh_;
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> grid_;
};

inline void add_welded_face(TriangleMesh& mesh, Welder& welder, const std::array<Vec3, 3>& corners,
                            std::size_t& dropped) {
  Face f{};
  for (int k = 0; k < 3; ++k) f[k] = welder.insert(corners[k]);
  if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
    ++dropped;
    return;
  }
  mesh.faces.push_back(f);
}

inline float read_f32(const std::uint8_t* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) |
                       (static_cast<std::uint32_t>(p[3]) << 24);
  float value;
  std::memcpy(&value, &bits, sizeof value);
  return value;
}

inline std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>((v >> (8 * k)) & 0xFF));
}

inline void put_f32(std::vector<std::uint8_t>& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, sizeof bits);
  put_u32(out, bits);
}

inline bool binary_stl_size_matches(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 84) return false;
  const std::uint64_t n = read_u32(bytes.data() + 80);
  return bytes.size() == 84 + 50 * n;
}

inline std::string_view trim(std::string_view s) {
  const auto* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool parse_double(std::string_view s, double& out) {
  // from_chars rejects a leading '+', which some exporters emit.
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

inline bool parse_long(std::string_view s, long& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

/// Splits text into lines, tolerating \r\n.
inline std::vector<std::string_view> lines_of(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(start, end - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    if (end == text.size()) break;
    start = end + 1;
  }
  return out;
}

inline TriangleMesh finish(TriangleMesh mesh, std::size_t dropped, std::vector<std::string>* warnings) {
  if (dropped > 0 && warnings) {
    warnings->push_back(std::to_string(dropped) + " degenerate facet(s) collapsed by welding were dropped");
  }
  if (mesh.faces.empty()) throw Error(ErrorKind::EmptyMesh, "mesh has no faces");
  return mesh;
}

inline TriangleMesh parse_stl_binary(std::span<const std::uint8_t> bytes, std::vector<std::string>* warnings) {
  if (bytes.size() < 84) {
    throw MalformedFileError("binary STL shorter than its 84-byte preamble", bytes.size(), std::nullopt);
  }
  const std::uint64_t n = read_u32(bytes.data() + 80);
  if (bytes.size() < 84 + 50 * n) {
    const std::uint64_t complete = (bytes.size() - 84) / 50;
    throw MalformedFileError("binary STL truncated: header declares " + std::to_string(n) +
                                 " facets, found " + std::to_string(complete),
                             84 + 50 * complete, std::nullopt);
  }
  if (bytes.size() > 84 + 50 * n && warnings) {
    warnings->push_back("binary STL has " + std::to_string(bytes.size() - 84 - 50 * n) +
                        " trailing bytes");
  }
  TriangleMesh mesh;
  mesh.faces.reserve(n);
  Welder welder(mesh);
  std::size_t dropped = 0;
  for (std::uint64_t f = 0; f < n; ++f) {
    const std::uint8_t* rec = bytes.data() + 84 + 50 * f;
    std::array<Vec3, 3> c;
    for (int k = 0; k < 3; ++k) {
      const std::uint8_t* p = rec + 12 + 12 * k;
      c[k] = Vec3(read_f32(p), read_f32(p + 4), read_f32(p + 8));
      if (!c[k].allFinite()) {
        throw MalformedFileError("non-finite coordinate in facet " + std::to_string(f),
                                 84 + 50 * f + 12 + 12 * k, std::nullopt);
      }
    }
    add_welded_face(mesh, welder, c, dropped);
  }
  std::string header(reinterpret_cast<const char*>(bytes.data()), 80);
  header = std::string(trim(header.substr(0, header.find('\0'))));
  mesh.name = header;
  return finish(std::move(mesh), dropped, warnings);
}

inline TriangleMesh parse_stl_ascii(std::string_view text, std::vector<std::string>* warnings) {
  const auto lines = lines_of(text);
  TriangleMesh mesh;
  Welder welder(mesh);
  std::size_t dropped = 0;
  bool seen_solid = false, seen_end = false;
  std::vector<Vec3> corners;
  bool in_facet = false, in_loop = false;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    const auto tok = tokens(lines[ln]);
    if (tok.empty()) continue;
    const std::size_t line_no = ln + 1;
    const auto& kw = tok[0];
    if (kw == "solid") {
      if (seen_solid && !seen_end) throw MalformedFileError("nested 'solid'", std::nullopt, line_no);
      seen_solid = true;
      seen_end = false;
      if (tok.size() > 1 && mesh.name.empty()) {
        auto rest = trim(lines[ln]);
        mesh.name = std::string(trim(rest.substr(5)));
      }
    } else if (kw == "endsolid") {
      seen_end = true;
    } else if (kw == "facet") {
      if (!seen_solid || in_facet) throw MalformedFileError("unexpected 'facet'", std::nullopt, line_no);
      in_facet = true;
      corners.clear();
    } else if (kw == "outer") {
      if (!in_facet || in_loop) throw MalformedFileError("unexpected 'outer loop'", std::nullopt, line_no);
      in_loop = true;
    } else if (kw == "vertex") {
      if (!in_loop) throw MalformedFileError("'vertex' outside a loop", std::nullopt, line_no);
      if (tok.size() != 4) throw MalformedFileError("'vertex' needs 3 coordinates", std::nullopt, line_no);
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        if (!parse_double(tok[1 + k], p[k])) {
          throw MalformedFileError("non-numeric coordinate '" + std::string(tok[1 + k]) + "'",
                                   std::nullopt, line_no);
        }
      }
      corners.push_back(p);
    } else if (kw == "endloop") {
      if (!in_loop) throw MalformedFileError("unexpected 'endloop'", std::nullopt, line_no);
      in_loop = false;
    } else if (kw == "endfacet") {
      if (!in_facet || in_loop) throw MalformedFileError("unexpected 'endfacet'", std::nullopt, line_no);
      if (corners.size() != 3) {
        throw MalformedFileError("facet has " + std::to_string(corners.size()) + " vertices", std::nullopt,
                                 line_no);
      }
      add_welded_face(mesh, welder, {corners[0], corners[1], corners[2]}, dropped);
      in_facet = false;
    } else {
      throw MalformedFileError("unknown keyword '" + std::string(kw) + "'", std::nullopt, line_no);
    }
  }
  if (!seen_solid) throw MalformedFileError("missing 'solid'", std::nullopt, 1);
  if (in_facet || in_loop) throw MalformedFileError("file ends inside a facet", std::nullopt, lines.size());
  return finish(std::move(mesh), dropped, warnings);
}

inline TriangleMesh parse_obj(std::string_view text, std::vector<std::string>* warnings) {
  const auto lines = lines_of(text);
  TriangleMesh mesh;
  struct PendingFace {
    std::vector<long> idx;
    std::size_t line;
  };
  std::vector<PendingFace> pending;
  std::set<std::string> ignored;
  for (std::size_t ln = 0; ln < lines.size(); ++ln) {
    auto line = lines[ln];
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto tok = tokens(line);
    if (tok.empty()) continue;
    const std::size_t line_no = ln + 1;
    if (tok[0] == "v") {
      if (tok.size() < 4 || tok.size() > 5) {
        throw MalformedFileError("'v' needs 3 coordinates", std::nullopt, line_no);
      }
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        if (!parse_double(tok[1 + k], p[k])) {
          throw MalformedFileError("non-numeric coordinate '" + std::string(tok[1 + k]) + "'",
                                   std::nullopt, line_no);
        }
      }
      mesh.vertices.push_back(p);
    } else if (tok[0] == "f") {
      if (tok.size() < 4) throw MalformedFileError("'f' needs at least 3 vertices", std::nullopt, line_no);
      PendingFace face{{}, line_no};
      for (std::size_t k = 1; k < tok.size(); ++k) {
        auto ref = tok[k].substr(0, tok[k].find('/'));
        long i = 0;
        if (!parse_long(ref, i) || i == 0) {
          throw MalformedFileError("bad face index '" + std::string(tok[k]) + "'", std::nullopt, line_no);
        }
        // Negative indices count back from the vertices read so far.
        const long resolved = i > 0 ? i - 1 : static_cast<long>(mesh.vertices.size()) + i;
        if (resolved < 0) {
          throw MalformedFileError("face index " + std::to_string(i) + " out of range", std::nullopt, line_no);
        }
        face.idx.push_back(resolved);
      }
      pending.push_back(std::move(face));
    } else {
      ignored.insert(std::string(tok[0]));
    }
  }
  if (warnings) {
    for (const auto& kw : ignored) warnings->push_back("ignored OBJ record type '" + kw + "'");
  }
  const auto n = static_cast<long>(mesh.vertices.size());
  std::size_t dropped = 0;
  for (const auto& face : pending) {
    for (auto i : face.idx) {
      if (i >= n) {
        throw MalformedFileError("face index " + std::to_string(i + 1) + " exceeds vertex count " +
                                     std::to_string(n),
                                 std::nullopt, face.line);
      }
    }
    for (std::size_t k = 1; k + 1 < face.idx.size(); ++k) {
      Face f{static_cast<std::uint32_t>(face.idx[0]), static_cast<std::uint32_t>(face.idx[k]),
             static_cast<std::uint32_t>(face.idx[k + 1])};
      if (f[0] == f[1] || f[1] == f[2] || f[0] == f[2]) {
        throw MalformedFileError("face repeats a vertex", std::nullopt, face.line);
      }
      mesh.faces.push_back(f);
    }
  }
  return finish(std::move(mesh), dropped, warnings);
}

inline bool looks_like_ascii_stl(std::string_view text) {
  auto t = trim(text);
  if (t.substr(0, 5) != "solid") return false;
  return t.find("facet") != std::string_view::npos || t.find("endsolid") != std::string_view::npos;
}

}  // namespace detail

/// Guesses the format of an in-memory file. A binary STL is recognized by
/// its facet count agreeing with the byte length, even when the header
/// happens to begin with "solid".
inline MeshFormat detect_format(std::span<const std::uint8_t> bytes) {
  if (detail::binary_stl_size_matches(bytes)) return MeshFormat::stl_binary;
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  if (detail::looks_like_ascii_stl(text)) return MeshFormat::stl_ascii;
  return MeshFormat::obj;
}

inline TriangleMesh parse_mesh(std::span<const std::uint8_t> bytes, MeshFormat format = MeshFormat::automatic,
                               std::vector<std::string>* warnings = nullptr) {
  if (bytes.empty()) throw MalformedFileError("empty input", 0, std::nullopt);
  if (format == MeshFormat::automatic) format = detect_format(bytes);
  std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  TriangleMesh mesh;
  switch (format) {
    case MeshFormat::stl_binary: mesh = detail::parse_stl_binary(bytes, warnings); break;
    case MeshFormat::stl_ascii: mesh = detail::parse_stl_ascii(text, warnings); break;
    case MeshFormat::obj:
    case MeshFormat::automatic: mesh = detail::parse_obj(text, warnings); break;
  }
  validate(mesh);
  return mesh;
}

inline TriangleMesh parse_mesh(std::string_view text, MeshFormat format = MeshFormat::automatic,
                               std::vector<std::string>* warnings = nullptr) {
  return parse_mesh(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()),
                    format, warnings);
}

inline std::vector<std::uint8_t> write_mesh(const TriangleMesh& mesh, MeshFormat format) {
  std::vector<std::uint8_t> out;
  auto face_normal = [&](std::size_t f) -> Vec3 {
    const auto [a, b, c] = mesh.corners(f);
    const Vec3 n = (b - a).cross(c - a);
    const double len = n.norm();
    return len > 0.0 ? Vec3(n / len) : Vec3::Zero();
  };
  switch (format) {
    case MeshFormat::stl_binary: {
      out.reserve(84 + 50 * mesh.faces.size());
      std::array<char, 80> header{};
      const std::string label = mesh.name.empty() ? std::string("handkit") : mesh.name;
      // A header starting with "solid" confuses some readers.
      const std::string text = label.rfind("solid", 0) == 0 ? "mesh " + label : label;
      std::memcpy(header.data(), text.data(), std::min<std::size_t>(text.size(), header.size()));
      out.insert(out.end(), header.begin(), header.end());
      detail::put_u32(out, static_cast<std::uint32_t>(mesh.faces.size()));
      for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        // Normal of the stored (float) triangle, so rewriting a parsed file is a no-op.
        std::array<Vec3, 3> c;
        for (int k = 0; k < 3; ++k) c[k] = mesh.vertices[mesh.faces[f][k]].cast<float>().cast<double>();
        const Vec3 raw = (c[1] - c[0]).cross(c[2] - c[0]);
        const Vec3 n = raw.norm() > 0.0 ? Vec3(raw.normalized()) : Vec3::Zero();
        for (int k = 0; k < 3; ++k) detail::put_f32(out, static_cast<float>(n[k]));
        for (auto idx : mesh.faces[f]) {
          for (int k = 0; k < 3; ++k) detail::put_f32(out, static_cast<float>(mesh.vertices[idx][k]));
        }
        out.push_back(0);
        out.push_back(0);
      }
      return out;
    }
    case MeshFormat::stl_ascii: {
      std::string s;
      const std::string label = mesh.name.empty() ? std::string("handkit") : mesh.name;
      s += "solid " + label + "\n";
      for (std::size_t f = 0; f < mesh.faces.size(); ++f) {
        const Vec3 n = face_normal(f);
        s += "  facet normal " + detail::format_float(n.x(), 9) + " " + detail::format_float(n.y(), 9) + " " +
             detail::format_float(n.z(), 9) + "\n    outer loop\n";
        for (auto idx : mesh.faces[f]) {
          const Vec3& p = mesh.vertices[idx];
          s += "      vertex " + detail::format_float(p.x(), 17) + " " + detail::format_float(p.y(), 17) + " " +
               detail::format_float(p.z(), 17) + "\n";
        }
        s += "    endloop\n  endfacet\n";
      }
      s += "endsolid " + label + "\n";
      return {s.begin(), s.end()};
    }
    case MeshFormat::obj:
    case MeshFormat::automatic: {
      std::string s;
      if (!mesh.name.empty()) s += "o " + mesh.name + "\n";
      for (const auto& p : mesh.vertices) {
        s += "v " + detail::format_float(p.x(), 17) + " " + detail::format_float(p.y(), 17) + " " +
             detail::format_float(p.z(), 17) + "\n";
      }
      for (const auto& t : mesh.faces) {
        s += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
      }
      return {s.begin(), s.end()};
    }
  }
  return out;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path.string() + "'");
}

inline MeshFormat format_from_extension(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".obj") return MeshFormat::obj;
  return MeshFormat::automatic;
}

inline TriangleMesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr) {
  const auto bytes = read_file_bytes(path);
  auto mesh = parse_mesh(std::span<const std::uint8_t>(bytes), format_from_extension(path), warnings);
  if (mesh.name.empty()) mesh.name = path.stem().string();
  return mesh;
}

inline void save_mesh(const std::filesystem::path& path, const TriangleMesh& mesh, MeshFormat format) {
  const auto bytes = write_mesh(mesh, format);
  write_file_bytes(path, bytes);
}

inline const char* extension_for(MeshFormat format) { return format == MeshFormat::obj ? ".obj" : ".stl"; }

}  // namespace handkit
