#include "nanotip/fdtd.hpp"

#include <algorithm>
#include <cmath>

namespace nanotip {

WorkerPool::WorkerPool(int threads) {
  for (int t = 1; t < std::max(1, threads); ++t) workers_.emplace_back(&WorkerPool::worker_loop, this, t);
}

WorkerPool::~WorkerPool() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  wake_.notify_all();
  for (auto& w : workers_) w.join();
}

void WorkerPool::parallel_for(int begin, int end, const std::function<void(int, int)>& body) {
  const int n = size();
  if (n == 1 || end - begin < n) {
    body(begin, end);
    return;
  }
  {
    std::lock_guard lock(mutex_);
    body_ = &body;
    begin_ = begin;
    end_ = end;
    pending_ = n - 1;
    ++generation_;
  }
  wake_.notify_all();
  body(begin, begin + (end - begin) / n);
  std::unique_lock lock(mutex_);
  done_.wait(lock, [&] { return pending_ == 0; });
  body_ = nullptr;
}

void WorkerPool::worker_loop(int id) {
  unsigned long seen = 0;
  for (;;) {
    const std::function<void(int, int)>* body;
    int b, e;
    {
      std::unique_lock lock(mutex_);
      wake_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      body = body_;
      b = begin_;
      e = end_;
    }
    const int n = size();
    const long span = e - b;
    (*body)(b + static_cast<int>(span * id / n), b + static_cast<int>(span * (id + 1) / n));
    {
      std::lock_guard lock(mutex_);
      if (--pending_ == 0) done_.notify_one();
    }
  }
}

double courant_dt(double grid_step_um, double safety) {
  if (!(grid_step_um > 0.0)) throw std::invalid_argument("grid step must be positive");
  if (!(safety > 0.0) || safety > 1.0) throw std::invalid_argument("Courant safety must lie in (0, 1]");
  return safety * grid_step_um / (kSpeedOfLightUmPerFs * std::sqrt(3.0));
}

int steps_per_period(double wavelength_um, double grid_step_um, double safety) {
  const double dt_max = fs_to_internal(courant_dt(grid_step_um, safety));
  return static_cast<int>(std::ceil(wavelength_um / dt_max - 1e-9));
}

StopRule StopRule::fixed(long steps, long accumulate_from) {
  StopRule r;
  r.kind = Kind::fixed;
  r.fixed_steps = steps;
  r.accumulate_from = accumulate_from;
  return r;
}

FdtdEngine::FdtdEngine(const GridSpec& spec, const PermittivityGrid& eps, int threads) : spec_(spec) {
  const auto& g = spec_.geometry;
  if (eps.geometry().nx != g.nx || eps.geometry().ny != g.ny || eps.geometry().nz != g.nz) {
    throw std::invalid_argument("permittivity grid does not match the grid spec");
  }
  if (!(spec_.dt > 0.0) || spec_.dt > g.dx / std::sqrt(3.0) * (1.0 + 1e-12)) {
    throw std::invalid_argument("time step violates the Courant bound");
  }
  sy_ = eps.stride_y();
  sz_ = eps.stride_z();
  size_ = eps.padded_size();
  for (int c = 0; c < 3; ++c) {
    eps_[c] = eps.component(c);
    ce_[c].resize(size_);
    const double base = spec_.dt / g.dx;
    for (std::size_t n = 0; n < size_; ++n) ce_[c][n] = static_cast<float>(base / eps_[c][n]);
  }
  build_profiles();
  pool_ = std::make_unique<WorkerPool>(std::max(1, threads));
}

void FdtdEngine::build_profiles() {
  const auto& g = spec_.geometry;
  const auto& p = spec_.pml;
  const double sigma_opt = (p.order + 1.0) * (376.730313668 / (150.0 * kPi)) / g.dx;
  const double sigma_max = p.sigma_scale * sigma_opt;
  const double dt = spec_.dt;

  for (int a = 0; a < 3; ++a) {
    const int n = g.n(a);
    for (int half = 0; half < 2; ++half) {
      Profile& pr = half ? prof_h_[a] : prof_e_[a];
      pr.inv_kappa.assign(n, 1.0f);
      pr.b.assign(n, 0.0f);
      pr.c.assign(n, 0.0f);
      if (!spec_.has_pml(a)) continue;
      for (int i = 0; i < n; ++i) {
        const double pos = i + 0.5 * half;
        const double lo = (p.cells - pos) / p.cells;
        const double hi = (pos - (n - 1 - p.cells)) / p.cells;
        const double depth = std::clamp(std::max(lo, hi), 0.0, 1.0);
        const double graded = std::pow(depth, p.order);
        const double sigma = sigma_max * graded;
        const double kappa = 1.0 + (p.kappa_max - 1.0) * graded;
        const double alpha = p.alpha_max * (1.0 - depth);
        const double b = std::exp(-(sigma / kappa + alpha) * dt);
        const double c = sigma > 0.0 ? sigma * (b - 1.0) / (sigma * kappa + kappa * kappa * alpha) : 0.0;
        pr.inv_kappa[i] = static_cast<float>(1.0 / kappa);
        pr.b[i] = static_cast<float>(b);
        pr.c[i] = static_cast<float>(c);
      }
    }
  }
}

FieldState FdtdEngine::make_state() const {
  FieldState s;
  for (int c = 0; c < 3; ++c) {
    s.e[c].assign(size_, 0.0f);
    s.h[c].assign(size_, 0.0f);
  }
  const auto& g = spec_.geometry;
  for (int a = 0; a < 3; ++a) {
    if (!spec_.has_pml(a)) continue;
    const int n = g.n(a);
    const int extent = spec_.pml.cells + 1;
    std::size_t cells = static_cast<std::size_t>(extent);
    for (int b = 0; b < 3; ++b) {
      if (b != a) cells *= static_cast<std::size_t>(g.n(b));
    }
    for (int begin : {0, n - extent}) {
      CpmlSlab slab;
      slab.axis = a;
      slab.begin = begin;
      slab.extent = extent;
      for (auto& v : slab.psi_e) v.assign(cells, 0.0f);
      for (auto& v : slab.psi_h) v.assign(cells, 0.0f);
      s.cpml.push_back(std::move(slab));
    }
  }
  return s;
}

void FdtdEngine::wrap_periodic(std::array<std::vector<float>, 3>& f, bool upper_ghost) const {
  const auto& g = spec_.geometry;
  for (int a = 0; a < 2; ++a) {
    if (spec_.lateral[a] != Boundary::periodic) continue;
    const int n = g.n(a);
    // upper ghost (index n) mirrors index 0; lower ghost (index -1) mirrors n-1.
    const int dst = upper_ghost ? n : -1;
    const int src = upper_ghost ? 0 : n - 1;
    for (int k = -1; k <= g.nz; ++k) {
      const int jb = a == 0 ? -1 : 0;
      const int je = a == 0 ? g.ny : 0;
      const int ib = a == 1 ? -1 : 0;
      const int ie = a == 1 ? g.nx : 0;
      for (int j = jb; j <= je; ++j) {
        for (int i = ib; i <= ie; ++i) {
          const std::size_t d = a == 0 ? at(dst, j, k) : at(i, dst, k);
          const std::size_t s = a == 0 ? at(src, j, k) : at(i, src, k);
          for (int c = 0; c < 3; ++c) f[c][d] = f[c][s];
        }
      }
    }
  }
}

void FdtdEngine::update_h(FieldState& s) const {
  const auto& g = spec_.geometry;
  wrap_periodic(s.e, true);
  const float ch = static_cast<float>(spec_.dt / g.dx);
  const std::size_t sy = sy_, sz = sz_;
  const float* ikx = prof_h_[0].inv_kappa.data();
  const float* iky = prof_h_[1].inv_kappa.data();
  const float* ikz = prof_h_[2].inv_kappa.data();
  const float* ex = s.e[0].data();
  const float* ey = s.e[1].data();
  const float* ez = s.e[2].data();
  float* hx = s.h[0].data();
  float* hy = s.h[1].data();
  float* hz = s.h[2].data();
  const int nx = g.nx, ny = g.ny;

  pool_->parallel_for(0, g.nz, [&](int k0, int k1) {
    for (int k = k0; k < k1; ++k) {
      const float kz = ikz[k];
      for (int j = 0; j < ny; ++j) {
        const float ky = iky[j];
        const std::size_t row = at(0, j, k);
        float* __restrict hxr = hx + row;
        float* __restrict hyr = hy + row;
        float* __restrict hzr = hz + row;
        const float* exr = ex + row;
        const float* eyr = ey + row;
        const float* ezr = ez + row;
#pragma GCC ivdep
        for (int i = 0; i < nx; ++i) {
          const float ez0 = ezr[i], ey0 = eyr[i], ex0 = exr[i];
          hxr[i] -= ch * ((ezr[i + sy] - ez0) * ky - (eyr[i + sz] - ey0) * kz);
          hyr[i] -= ch * ((exr[i + sz] - ex0) * kz - (ezr[i + 1] - ez0) * ikx[i]);
          hzr[i] -= ch * ((eyr[i + 1] - ey0) * ikx[i] - (exr[i + sy] - ex0) * ky);
        }
        for (auto& slab : s.cpml) cpml_row<true>(s, slab, j, k);
      }
    }
  });
}

void FdtdEngine::update_e(FieldState& s, std::span<const EdgeCurrent> currents) const {
  const auto& g = spec_.geometry;
  wrap_periodic(s.h, false);
  const std::size_t sy = sy_, sz = sz_;
  const float* ikx = prof_e_[0].inv_kappa.data();
  const float* iky = prof_e_[1].inv_kappa.data();
  const float* ikz = prof_e_[2].inv_kappa.data();
  float* ex = s.e[0].data();
  float* ey = s.e[1].data();
  float* ez = s.e[2].data();
  const float* hx = s.h[0].data();
  const float* hy = s.h[1].data();
  const float* hz = s.h[2].data();
  const float* cx = ce_[0].data();
  const float* cy = ce_[1].data();
  const float* cz = ce_[2].data();
  const int nx = g.nx, ny = g.ny;

  pool_->parallel_for(0, g.nz, [&](int k0, int k1) {
    for (int k = k0; k < k1; ++k) {
      const float kz = ikz[k];
      for (int j = 0; j < ny; ++j) {
        const float ky = iky[j];
        const std::size_t row = at(0, j, k);
        float* __restrict exr = ex + row;
        float* __restrict eyr = ey + row;
        float* __restrict ezr = ez + row;
        const float* hxr = hx + row;
        const float* hyr = hy + row;
        const float* hzr = hz + row;
        const float* cxr = cx + row;
        const float* cyr = cy + row;
        const float* czr = cz + row;
#pragma GCC ivdep
        for (int i = 0; i < nx; ++i) {
          const float hx0 = hxr[i], hy0 = hyr[i], hz0 = hzr[i];
          exr[i] += cxr[i] * ((hz0 - hzr[i - sy]) * ky - (hy0 - hyr[i - sz]) * kz);
          eyr[i] += cyr[i] * ((hx0 - hxr[i - sz]) * kz - (hz0 - hzr[i - 1]) * ikx[i]);
          ezr[i] += czr[i] * ((hy0 - hyr[i - 1]) * ikx[i] - (hx0 - hxr[i - sy]) * ky);
        }
        for (auto& slab : s.cpml) cpml_row<false>(s, slab, j, k);
      }
    }
  });

  // dE/dt = (curl H - J)/eps, so E -= (dt/eps) J = ce * dx * J.
  for (const auto& src : currents) {
    const std::size_t n = at(src.i, src.j, src.k);
    s.e[src.component][n] -= static_cast<float>(ce_[src.component][n] * g.dx * src.value);
  }
}

// For slab axis a with cyclic partners (b, c):
//   H_b += ch * psi(dE_c along a),  H_c -= ch * psi(dE_b along a)
//   E_b -= ce * psi(dH_c along a),  E_c += ce * psi(dH_b along a)
// Applied row by row right after the bulk update while the row is still cached.
template <bool IsH>
void FdtdEngine::cpml_row(FieldState& s, CpmlSlab& slab, int j, int k) const {
  const auto& g = spec_.geometry;
  const int a = slab.axis, b = (a + 1) % 3, c = (a + 2) % 3;
  int i0 = 0, i1 = g.nx;
  std::size_t m;
  int q;
  if (a == 0) {
    i0 = slab.begin;
    i1 = slab.begin + slab.extent;
    m = (static_cast<std::size_t>(k) * g.ny + j) * slab.extent;
    q = -1;
  } else if (a == 1) {
    if (j < slab.begin || j >= slab.begin + slab.extent) return;
    m = (static_cast<std::size_t>(k) * slab.extent + (j - slab.begin)) * g.nx;
    q = j;
  } else {
    if (k < slab.begin || k >= slab.begin + slab.extent) return;
    m = (static_cast<std::size_t>(k - slab.begin) * g.ny + j) * g.nx;
    q = k;
  }
  const Profile& pr = IsH ? prof_h_[a] : prof_e_[a];
  const std::size_t st = stride(a);
  const std::size_t row = at(i0, j, k);
  const int n = i1 - i0;
  float* __restrict qb = (IsH ? slab.psi_h[0].data() : slab.psi_e[0].data()) + m;
  float* __restrict qc = (IsH ? slab.psi_h[1].data() : slab.psi_e[1].data()) + m;
  const float* pb = pr.b.data() + (q < 0 ? i0 : 0);
  const float* pc = pr.c.data() + (q < 0 ? i0 : 0);
  const float sb_scalar = q < 0 ? 0.0f : pr.b[q];
  const float sc_scalar = q < 0 ? 0.0f : pr.c[q];
  if constexpr (IsH) {
    const float ch = static_cast<float>(spec_.dt / g.dx);
    const float* eb = s.e[b].data() + row;
    const float* ec = s.e[c].data() + row;
    float* __restrict hb = s.h[b].data() + row;
    float* __restrict hc = s.h[c].data() + row;
#pragma GCC ivdep
    for (int i = 0; i < n; ++i) {
      const float bb = q < 0 ? pb[i] : sb_scalar;
      const float cc = q < 0 ? pc[i] : sc_scalar;
      qb[i] = bb * qb[i] + cc * (ec[i + st] - ec[i]);
      qc[i] = bb * qc[i] + cc * (eb[i + st] - eb[i]);
      hb[i] += ch * qb[i];
      hc[i] -= ch * qc[i];
    }
  } else {
    const float* hb = s.h[b].data() + row;
    const float* hc = s.h[c].data() + row;
    float* __restrict eb = s.e[b].data() + row;
    float* __restrict ec = s.e[c].data() + row;
    const float* ceb = ce_[b].data() + row;
    const float* cec = ce_[c].data() + row;
#pragma GCC ivdep
    for (int i = 0; i < n; ++i) {
      const float bb = q < 0 ? pb[i] : sb_scalar;
      const float cc = q < 0 ? pc[i] : sc_scalar;
      qb[i] = bb * qb[i] + cc * (hc[i] - hc[i - st]);
      qc[i] = bb * qc[i] + cc * (hb[i] - hb[i - st]);
      eb[i] -= ceb[i] * qb[i];
      ec[i] += cec[i] * qc[i];
    }
  }
}

template void FdtdEngine::cpml_row<true>(FieldState&, CpmlSlab&, int, int) const;
template void FdtdEngine::cpml_row<false>(FieldState&, CpmlSlab&, int, int) const;

void FdtdEngine::step(FieldState& state, std::span<const EdgeCurrent> currents) const {
  update_h(state);
  update_e(state, currents);
  state.t += spec_.dt;
  ++state.step_index;
}

bool FdtdEngine::all_finite(const FieldState& state) const {
  for (int c = 0; c < 3; ++c) {
    for (const auto* f : {&state.e[c], &state.h[c]}) {
      float acc = 0.0f;
      for (float v : *f) acc += v * 0.0f;
      if (acc != 0.0f) return false;
    }
  }
  return true;
}

RunOutcome run_until(const FdtdEngine& engine, FieldState& state, const SourceFn& sources,
                     std::span<FieldObserver* const> monitors, const StopRule& stop) {
  RunOutcome out;
  std::vector<EdgeCurrent> currents;
  const double dt = engine.spec().dt;

  auto advance = [&](bool observe) {
    currents.clear();
    if (sources) sources(state.t + 0.5 * dt, currents);
    engine.update_h(state);
    if (observe) {
      for (auto* m : monitors) m->observe_h(engine, state, state.t + 0.5 * dt);
    }
    engine.update_e(state, currents);
    state.t += dt;
    ++state.step_index;
    if (observe) {
      for (auto* m : monitors) m->observe_e(engine, state, state.t);
    }
    if (stop.finite_check_interval > 0 && state.step_index % stop.finite_check_interval == 0 &&
        !engine.all_finite(state)) {
      throw DivergenceError(state.step_index);
    }
  };

  if (stop.kind == StopRule::Kind::fixed) {
    for (auto* m : monitors) m->begin_window();
    for (long s = 0; s < stop.fixed_steps; ++s) advance(s >= stop.accumulate_from);
    if (stop.fixed_steps > 0 && !engine.all_finite(state)) throw DivergenceError(state.step_index);
    // Nothing observed leaves the monitors without a window.
    const bool observed = stop.fixed_steps > std::max(0L, stop.accumulate_from);
    if (observed) {
      for (auto* m : monitors) m->end_window();
    }
    out.steps = stop.fixed_steps;
    out.converged = true;
    out.windows = observed ? 1 : 0;
    return out;
  }

  if (stop.steps_per_period <= 0 || stop.window_periods <= 0) {
    throw std::invalid_argument("auto shutoff needs steps_per_period and window_periods");
  }
  const long window = stop.steps_per_period * stop.window_periods;
  for (long s = 0; s < stop.warmup_steps && s < stop.max_steps; ++s) advance(false);
  long steps = std::min(stop.warmup_steps, stop.max_steps);

  std::vector<double> previous(monitors.size(), 0.0);
  bool have_previous = false;
  while (steps + window <= stop.max_steps) {
    for (auto* m : monitors) m->begin_window();
    for (long s = 0; s < window; ++s) advance(true);
    steps += window;
    for (auto* m : monitors) m->end_window();
    ++out.windows;

    double scale = 0.0;
    for (auto* m : monitors) scale = std::max(scale, std::abs(m->window_power()));
    double change = 0.0;
    for (std::size_t i = 0; i < monitors.size(); ++i) {
      const double p = monitors[i]->window_power();
      const double ref = std::max(std::abs(p), 1e-6 * scale);
      change = std::max(change, ref > 0.0 ? std::abs(p - previous[i]) / ref : 0.0);
      previous[i] = p;
    }
    if (!engine.all_finite(state)) throw DivergenceError(state.step_index);
    out.last_change = have_previous ? change : 1.0;
    if (have_previous && change < stop.shutoff) {
      out.converged = true;
      break;
    }
    have_previous = true;
  }
  out.steps = steps;
  return out;
}

}  // namespace nanotip
