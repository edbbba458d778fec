#pragma once

#include <complex>
#include <stdexcept>
#include <vector>

#include "nanotip/fdtd.hpp"

namespace nanotip {

using cplx = std::complex<double>;

struct MonitorError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tangential phasors on a grid-aligned plane, co-located at face centres.
/// With normal n the tangential axes are t1 = n+1, t2 = n+2 (cyclic), so
/// the normal flux density is Et1*conj(Ht2) - Et2*conj(Ht1).
struct PlanePhasors {
  int normal = 2;
  double plane_coord = 0.0;  ///< position of the plane along the normal
  int n1 = 0, n2 = 0;        ///< sample counts along t1, t2
  double t1_origin = 0.0, t2_origin = 0.0;  ///< coordinate of sample (0, 0)
  double spacing = 0.0;
  std::vector<cplx> e1, e2, h1, h2;  ///< index a + n1 * b

  std::size_t at(int a, int b) const { return static_cast<std::size_t>(a) + static_cast<std::size_t>(n1) * b; }
};

/// Running single-frequency DFT over a rectangular patch of a grid plane.
/// accumulate adds field * exp(-i w t) * dt; a completed window is normalised by
/// 2/T so a steady sinusoid of amplitude A maps to a phasor of modulus A.
class DftPlaneMonitor : public FieldObserver {
 public:
  /// Cells [a0, a1) x [b0, b1) along (t1, t2) on the node plane `plane` of `normal`.
  /// `orientation` is +1 for flux along +normal, -1 for the reverse.
  DftPlaneMonitor(const FdtdEngine& engine, int normal, int plane, int a0, int a1, int b0, int b1,
                  double angular_frequency, int orientation = 1);

  void begin_window() override;
  void observe_h(const FdtdEngine& engine, const FieldState& state, double t_h) override;
  void observe_e(const FdtdEngine& engine, const FieldState& state, double t_e) override;
  void end_window() override;
  double window_power() const override { return poynting_power(); }

  /// 0.5 * Re sum (E x H*) . n dA over the last completed window.
  double poynting_power() const;
  bool has_window() const { return completed_; }
  const PlanePhasors& phasors() const;

  int normal() const { return normal_; }
  int plane() const { return plane_; }

 private:
  int normal_, plane_, a0_, a1_, b0_, b1_, sign_;
  double omega_, dt_;
  long count_e_ = 0, count_h_ = 0;
  bool completed_ = false;
  std::vector<cplx> acc_e1_, acc_e2_, acc_h1_, acc_h2_;
  PlanePhasors result_;
  std::size_t s_n_, s_1_, s_2_;
  std::size_t origin_index_;
  std::size_t row_stride_ = 0;
};

/// Closed box of six outward-oriented plane monitors around node ranges
/// [lo, hi] on each axis.
class DftBoxMonitor : public FieldObserver {
 public:
  DftBoxMonitor(const FdtdEngine& engine, std::array<int, 3> lo, std::array<int, 3> hi, double angular_frequency);

  void begin_window() override;
  void observe_h(const FdtdEngine& engine, const FieldState& state, double t_h) override;
  void observe_e(const FdtdEngine& engine, const FieldState& state, double t_e) override;
  void end_window() override;
  double window_power() const override { return net_outward_power(); }

  /// Net outward flux, the sum of the six signed face fluxes.
  double net_outward_power() const;
  const std::vector<DftPlaneMonitor>& faces() const { return faces_; }

 private:
  std::vector<DftPlaneMonitor> faces_;
};

/// Box of half-width `half_cells` around the grid node nearest `center`.
DftBoxMonitor box_around(const FdtdEngine& engine, Vec3 center, int half_cells, double angular_frequency);

/// Emitted power measured by a box that encloses the source.
double total_emitted_power(const DftBoxMonitor& box);

}  // namespace nanotip
