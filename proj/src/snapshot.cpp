#include "nanotip/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nanotip {

namespace {

void write_floats(std::ofstream& out, const std::vector<float>& v) {
  static_assert(sizeof(float) == 4);
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 4));
  } else {
    for (float f : v) {
      auto u = std::bit_cast<std::uint32_t>(f);
      const char b[4] = {char(u), char(u >> 8), char(u >> 16), char(u >> 24)};
      out.write(b, 4);
    }
  }
}

void finish(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace

void write_field_snapshot(const std::string& path, const FdtdEngine& engine, const FieldState& state) {
  const auto& g = engine.geometry();
  nlohmann::json header = {{"format", "nanotip-fields"},
                           {"dtype", "float32"},
                           {"byte_order", "little"},
                           {"dims", {g.nx, g.ny, g.nz}},
                           {"dx_um", g.dx},
                           {"origin_um", {g.origin.x, g.origin.y, g.origin.z}},
                           {"time_fs", internal_to_fs(state.t)},
                           {"step", state.step_index},
                           {"components", {"Ex", "Ey", "Ez", "Hx", "Hy", "Hz"}}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << header.dump() << '\n';
  std::vector<float> buf(g.cell_count());
  for (int f = 0; f < 6; ++f) {
    const auto& src = f < 3 ? state.e[f] : state.h[f - 3];
    std::size_t n = 0;
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) buf[n++] = src[engine.at(i, j, k)];
    write_floats(out, buf);
  }
  finish(out, path);
}

void write_phasor_dump(const std::string& path, const PlanePhasors& p) {
  nlohmann::json header = {{"format", "nanotip-phasors"},
                           {"dtype", "float32"},
                           {"byte_order", "little"},
                           {"normal", p.normal},
                           {"plane_um", p.plane_coord},
                           {"dims", {p.n1, p.n2}},
                           {"origin_um", {p.t1_origin, p.t2_origin}},
                           {"spacing_um", p.spacing},
                           {"components", {"E1", "E2", "H1", "H2"}},
                           {"layout", "interleaved re,im"}};
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << header.dump() << '\n';
  for (const auto* c : {&p.e1, &p.e2, &p.h1, &p.h2}) {
    std::vector<float> buf;
    buf.reserve(c->size() * 2);
    for (const auto& z : *c) {
      buf.push_back(static_cast<float>(z.real()));
      buf.push_back(static_cast<float>(z.imag()));
    }
    write_floats(out, buf);
  }
  finish(out, path);
}

BinaryDump read_dump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::string line;
  std::getline(in, line);
  BinaryDump d;
  d.header = nlohmann::json::parse(line);
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() % 4 != 0) throw std::runtime_error("truncated dump '" + path + "'");
  d.data.resize(bytes.size() / 4);
  for (std::size_t i = 0; i < d.data.size(); ++i) {
    const auto* b = reinterpret_cast<const unsigned char*>(bytes.data() + 4 * i);
    const std::uint32_t u = b[0] | (b[1] << 8) | (b[2] << 16) | (std::uint32_t(b[3]) << 24);
    d.data[i] = std::bit_cast<float>(u);
  }
  return d;
}

}  // namespace nanotip
