#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "nanotip/fdtd.hpp"
#include "nanotip/monitors.hpp"

namespace nanotip {

// File layout shared by field snapshots and monitor dumps: one line of JSON
// (terminated by '\n') followed by raw little-endian IEEE float32 data in the
// order the header lists. Arrays are x-fastest.

/// Dumps Ex, Ey, Ez, Hx, Hy, Hz over the nx*ny*nz nodes (ghost layers dropped).
void write_field_snapshot(const std::string& path, const FdtdEngine& engine, const FieldState& state);

/// Dumps the tangential phasors of a plane monitor as interleaved (re, im) pairs.
void write_phasor_dump(const std::string& path, const PlanePhasors& phasors);

struct BinaryDump {
  nlohmann::json header;
  std::vector<float> data;
};

BinaryDump read_dump(const std::string& path);

}  // namespace nanotip
