#include "nanotip/monitors.hpp"

#include <cmath>

namespace nanotip {

DftPlaneMonitor::DftPlaneMonitor(const FdtdEngine& engine, int normal, int plane, int a0, int a1, int b0, int b1,
                                 double angular_frequency, int orientation)
    : normal_(normal), plane_(plane), a0_(a0), a1_(a1), b0_(b0), b1_(b1), sign_(orientation >= 0 ? 1 : -1),
      omega_(angular_frequency), dt_(engine.spec().dt) {
  if (normal < 0 || normal > 2 || a1 <= a0 || b1 <= b0) throw MonitorError("invalid monitor extent");
  const auto& g = engine.geometry();
  const int t1 = (normal + 1) % 3, t2 = (normal + 2) % 3;
  if (plane < 0 || plane >= g.n(normal) || a0 < 0 || a1 >= g.n(t1) + 1 || b0 < 0 || b1 >= g.n(t2) + 1) {
    throw MonitorError("monitor lies outside the grid");
  }
  s_n_ = engine.stride(normal);
  s_1_ = engine.stride(t1);
  s_2_ = engine.stride(t2);
  int idx[3];
  idx[normal] = plane;
  idx[t1] = a0;
  idx[t2] = b0;
  origin_index_ = engine.at(idx[0], idx[1], idx[2]);

  result_.normal = normal;
  result_.plane_coord = g.coord(normal, plane);
  result_.n1 = a1 - a0;
  result_.n2 = b1 - b0;
  result_.t1_origin = g.coord(t1, a0 + 0.5);
  result_.t2_origin = g.coord(t2, b0 + 0.5);
  result_.spacing = g.dx;
  const std::size_t n = static_cast<std::size_t>(result_.n1) * result_.n2;
  acc_e1_.assign(n, 0.0);
  acc_e2_.assign(n, 0.0);
  acc_h1_.assign(n, 0.0);
  acc_h2_.assign(n, 0.0);
}

void DftPlaneMonitor::begin_window() {
  std::fill(acc_e1_.begin(), acc_e1_.end(), cplx{});
  std::fill(acc_e2_.begin(), acc_e2_.end(), cplx{});
  std::fill(acc_h1_.begin(), acc_h1_.end(), cplx{});
  std::fill(acc_h2_.begin(), acc_h2_.end(), cplx{});
  count_e_ = count_h_ = 0;
}

void DftPlaneMonitor::observe_h(const FdtdEngine&, const FieldState& state, double t_h) {
  const int t1 = (normal_ + 1) % 3, t2 = (normal_ + 2) % 3;
  const float* h1 = state.h[t1].data();
  const float* h2 = state.h[t2].data();
  const cplx w = std::polar(dt_, -omega_ * t_h) * 0.25;
  const int n1 = a1_ - a0_;
  for (int b = 0; b < b1_ - b0_; ++b) {
    for (int a = 0; a < n1; ++a) {
      const std::size_t p = origin_index_ + a * s_1_ + b * s_2_;
      const double v1 = double(h1[p]) + h1[p + s_1_] + h1[p - s_n_] + h1[p + s_1_ - s_n_];
      const double v2 = double(h2[p]) + h2[p + s_2_] + h2[p - s_n_] + h2[p + s_2_ - s_n_];
      const std::size_t m = static_cast<std::size_t>(a) + static_cast<std::size_t>(n1) * b;
      acc_h1_[m] += v1 * w;
      acc_h2_[m] += v2 * w;
    }
  }
  ++count_h_;
}

void DftPlaneMonitor::observe_e(const FdtdEngine&, const FieldState& state, double t_e) {
  const int t1 = (normal_ + 1) % 3, t2 = (normal_ + 2) % 3;
  const float* e1 = state.e[t1].data();
  const float* e2 = state.e[t2].data();
  const cplx w = std::polar(dt_, -omega_ * t_e) * 0.5;
  const int n1 = a1_ - a0_;
  for (int b = 0; b < b1_ - b0_; ++b) {
    for (int a = 0; a < n1; ++a) {
      const std::size_t p = origin_index_ + a * s_1_ + b * s_2_;
      const double v1 = double(e1[p]) + e1[p + s_2_];
      const double v2 = double(e2[p]) + e2[p + s_1_];
      const std::size_t m = static_cast<std::size_t>(a) + static_cast<std::size_t>(n1) * b;
      acc_e1_[m] += v1 * w;
      acc_e2_[m] += v2 * w;
    }
  }
  ++count_e_;
}

void DftPlaneMonitor::end_window() {
  if (count_e_ == 0 || count_h_ == 0) throw MonitorError("monitor window closed without samples");
  const double fe = 2.0 / (count_e_ * dt_);
  const double fh = 2.0 / (count_h_ * dt_);
  const std::size_t n = acc_e1_.size();
  result_.e1.resize(n);
  result_.e2.resize(n);
  result_.h1.resize(n);
  result_.h2.resize(n);
  for (std::size_t m = 0; m < n; ++m) {
    result_.e1[m] = acc_e1_[m] * fe;
    result_.e2[m] = acc_e2_[m] * fe;
    result_.h1[m] = acc_h1_[m] * fh;
    result_.h2[m] = acc_h2_[m] * fh;
  }
  completed_ = true;
}

const PlanePhasors& DftPlaneMonitor::phasors() const {
  if (!completed_) throw MonitorError("monitor has no completed accumulation window");
  return result_;
}

double DftPlaneMonitor::poynting_power() const {
  const auto& p = phasors();
  double sum = 0.0;
  for (std::size_t m = 0; m < p.e1.size(); ++m) {
    sum += (p.e1[m] * std::conj(p.h2[m]) - p.e2[m] * std::conj(p.h1[m])).real();
  }
  return sign_ * 0.5 * sum * p.spacing * p.spacing;
}

DftBoxMonitor::DftBoxMonitor(const FdtdEngine& engine, std::array<int, 3> lo, std::array<int, 3> hi,
                             double angular_frequency) {
  for (int n = 0; n < 3; ++n) {
    const int t1 = (n + 1) % 3, t2 = (n + 2) % 3;
    faces_.emplace_back(engine, n, lo[n], lo[t1], hi[t1], lo[t2], hi[t2], angular_frequency, -1);
    faces_.emplace_back(engine, n, hi[n], lo[t1], hi[t1], lo[t2], hi[t2], angular_frequency, +1);
  }
}

void DftBoxMonitor::begin_window() {
  for (auto& f : faces_) f.begin_window();
}
void DftBoxMonitor::observe_h(const FdtdEngine& engine, const FieldState& state, double t_h) {
  for (auto& f : faces_) f.observe_h(engine, state, t_h);
}
void DftBoxMonitor::observe_e(const FdtdEngine& engine, const FieldState& state, double t_e) {
  for (auto& f : faces_) f.observe_e(engine, state, t_e);
}
void DftBoxMonitor::end_window() {
  for (auto& f : faces_) f.end_window();
}

double DftBoxMonitor::net_outward_power() const {
  double sum = 0.0;
  for (const auto& f : faces_) sum += f.poynting_power();
  return sum;
}

DftBoxMonitor box_around(const FdtdEngine& engine, Vec3 center, int half_cells, double angular_frequency) {
  const auto& g = engine.geometry();
  std::array<int, 3> lo{}, hi{};
  for (int a = 0; a < 3; ++a) {
    const int c = static_cast<int>(std::lround(g.index_of(a, center[a])));
    lo[a] = c - half_cells;
    hi[a] = c + half_cells;
    if (lo[a] < engine.interior_begin(a) || hi[a] > engine.interior_end(a)) {
      throw MonitorError("power box around the source reaches into the PML");
    }
  }
  return DftBoxMonitor(engine, lo, hi, angular_frequency);
}

double total_emitted_power(const DftBoxMonitor& box) { return box.net_outward_power(); }

}  // namespace nanotip
