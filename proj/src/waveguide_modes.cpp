#include "nanotip/waveguide_modes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>


#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/bessel_prime.hpp>

#include "nanotip/units.hpp"

namespace nanotip {

namespace bm = boost::math;
using cd = std::complex<double>;

std::string to_string(ModeFamily f) {
  switch (f) {
    case ModeFamily::TE: return "TE";
    case ModeFamily::TM: return "TM";
    case ModeFamily::HE: return "HE";
    case ModeFamily::EH: return "EH";
  }
  return "HE";
}

std::string ModeLabel::name() const { return to_string(family) + std::to_string(nu) + std::to_string(m); }

std::string ModeLabel::str() const {
  if (nu == 0) return name();
  return name() + (polarization == 0 ? "e" : "o");
}

double v_number(double radius, double n_core, double n_clad, double wavelength) {
  if (!(n_clad >= 1.0) || !(n_core > n_clad)) throw ModeError("guidance needs n_core > n_clad >= 1");
  if (!(radius >= 0.0) || !(wavelength > 0.0)) throw ModeError("radius must be >= 0 and wavelength > 0");
  return 2.0 * kPi * radius / wavelength * std::sqrt(n_core * n_core - n_clad * n_clad);
}

double GuidedMode::v() const { return v_number(fiber.radius, fiber.n_core, fiber.n_clad, fiber.wavelength); }
double GuidedMode::beta() const { return 2.0 * kPi / fiber.wavelength * n_eff; }

namespace {

struct Params {
  double k0, a, n1, n2, v;
};

Params params_of(const StepIndexFiber& f) {
  return {2.0 * kPi / f.wavelength, f.radius, f.n_core, f.n_clad,
          v_number(f.radius, f.n_core, f.n_clad, f.wavelength)};
}

// K'(w) / (w K(w)), computed from the recurrence to stay finite for large w.
double k_hat(int nu, double w) {
  const double k = bm::cyl_bessel_k(nu, w);
  const double km1 = bm::cyl_bessel_k(std::abs(nu - 1), w);
  // K'_nu = -K_{nu-1} - (nu/w) K_nu
  return (-km1 / k - nu / w) / w;
}

// Branch term X such that J'(u)/(u J(u)) = X on a hybrid mode; sign +1 gives EH, -1 gives HE.
double hybrid_x(int nu, double u, double w, double n_eff, const Params& p, int sign) {
  const double r = (p.n2 * p.n2) / (p.n1 * p.n1);
  const double kh = k_hat(nu, w);
  const double s = 1.0 / (u * u) + 1.0 / (w * w);
  const double bn = n_eff / p.n1;
  const double root = std::sqrt(0.25 * (1.0 - r) * (1.0 - r) * kh * kh + nu * nu * bn * bn * s * s);
  return -0.5 * (1.0 + r) * kh + sign * root;
}

// u and w from n_eff.
void uw(const Params& p, double n_eff, double& u, double& w) {
  u = p.k0 * p.a * std::sqrt(std::max(0.0, p.n1 * p.n1 - n_eff * n_eff));
  w = p.k0 * p.a * std::sqrt(std::max(0.0, n_eff * n_eff - p.n2 * p.n2));
}

// Characteristic functions without poles in the interior of (n2, n1).
double characteristic(ModeFamily fam, int nu, double n_eff, const Params& p) {
  double u, w;
  uw(p, n_eff, u, w);
  switch (fam) {
    case ModeFamily::TE: {
      const double j0 = bm::cyl_bessel_j(0, u), j1 = bm::cyl_bessel_j(1, u);
      return j1 / u + j0 * bm::cyl_bessel_k(1, w) / (w * bm::cyl_bessel_k(0, w));
    }
    case ModeFamily::TM: {
      const double j0 = bm::cyl_bessel_j(0, u), j1 = bm::cyl_bessel_j(1, u);
      return p.n1 * p.n1 * j1 / u + p.n2 * p.n2 * j0 * bm::cyl_bessel_k(1, w) / (w * bm::cyl_bessel_k(0, w));
    }
    case ModeFamily::HE:
    case ModeFamily::EH: {
      const int sign = fam == ModeFamily::EH ? 1 : -1;
      const double j = bm::cyl_bessel_j(nu, u);
      const double jp = bm::cyl_bessel_j_prime(nu, u);
      return jp / u - j * hybrid_x(nu, u, w, n_eff, p, sign);
    }
  }
  return 0.0;
}

std::vector<double> find_roots(ModeFamily fam, int nu, const Params& p, int scan_points) {
  std::vector<double> roots;
  const double span = p.n1 - p.n2;
  const double lo = p.n2 + span * 1e-12, hi = p.n1 - span * 1e-12;
  auto f = [&](double n) { return characteristic(fam, nu, n, p); };
  double x0 = hi, f0 = f(hi);
  for (int s = 1; s <= scan_points; ++s) {
    const double x1 = hi - (hi - lo) * s / scan_points;
    const double f1 = f(x1);
    if (std::isfinite(f0) && std::isfinite(f1) && ((f0 < 0.0) != (f1 < 0.0))) {
      double a = x1, b = x0, fa = f1;
      for (int it = 0; it < 200 && b - a > 4 * std::numeric_limits<double>::epsilon() * b; ++it) {
        const double mid = 0.5 * (a + b);
        const double fm = f(mid);
        if ((fm < 0.0) == (fa < 0.0)) {
          a = mid;
          fa = fm;
        } else {
          b = mid;
        }
      }
      roots.push_back(0.5 * (a + b));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;  // descending n_eff
}

struct Radial {
  double rr, drr;  // R(r), dR/dr
  double kc2;      // n^2 k0^2 - beta^2
  double eps;
};

struct Coeffs {
  double a_ez, b_hz;  // longitudinal amplitudes
};

Coeffs coefficients(const GuidedMode& m, const Params& p) {
  const int nu = m.label.nu;
  switch (m.label.family) {
    case ModeFamily::TE: return {0.0, 1.0};
    case ModeFamily::TM: return {1.0, 0.0};
    default: break;
  }
  const double beta = p.k0 * m.n_eff;
  const int sign = m.label.family == ModeFamily::EH ? 1 : -1;
  const double x = hybrid_x(nu, m.u, m.w, m.n_eff, p, sign);
  const double s = 1.0 / (m.u * m.u) + 1.0 / (m.w * m.w);
  const double b = -beta * nu * s / (p.k0 * (x + k_hat(nu, m.w)));
  return {1.0, b};
}

Radial radial(const GuidedMode& m, const Params& p, double r) {
  const int nu = m.label.nu;
  const double beta = p.k0 * m.n_eff;
  if (r < p.a) {
    const double kap = m.u / p.a;
    return {bm::cyl_bessel_j(nu, kap * r), kap * bm::cyl_bessel_j_prime(nu, kap * r),
            p.k0 * p.k0 * p.n1 * p.n1 - beta * beta, p.n1 * p.n1};
  }
  const double gam = m.w / p.a;
  const double scale = bm::cyl_bessel_j(nu, m.u) / bm::cyl_bessel_k(nu, m.w);
  const double x = gam * r;
  const double k = bm::cyl_bessel_k(nu, x);
  const double kp = -bm::cyl_bessel_k(std::abs(nu - 1), x) - (x > 0 ? nu / x : 0.0) * k;
  return {scale * k, scale * gam * kp, p.k0 * p.k0 * p.n2 * p.n2 - beta * beta, p.n2 * p.n2};
}

// Cartesian fields from radial parts at angle theta.
ModeField assemble(const GuidedMode& m, const Params& p, const Coeffs& c, const Radial& rad, double r,
                   double theta) {
  const int nu = m.label.nu;
  const double phi0 = (nu > 0 && m.label.polarization == 1) ? kPi / (2.0 * nu) : 0.0;
  const double arg = nu * (theta - phi0);
  const double cs = nu == 0 ? 1.0 : std::cos(arg);
  const double sn = nu == 0 ? 1.0 : std::sin(arg);
  const double cn = std::cos(arg), sv = std::sin(arg);
  const double beta = p.k0 * m.n_eff;
  const double omega = p.k0;
  const double inv_r = 1.0 / r;
  const cd f(0.0, -1.0 / rad.kc2);
  const double A = c.a_ez, B = c.b_hz;
  const cd er = f * (beta * A * rad.drr * cs + omega * inv_r * B * nu * rad.rr * cn);
  const cd et = f * (-beta * inv_r * A * nu * rad.rr * sv - omega * B * rad.drr * sn);
  const cd hr = f * (beta * B * rad.drr * sn + omega * rad.eps * inv_r * A * nu * rad.rr * sv);
  const cd ht = f * (beta * inv_r * B * nu * rad.rr * cn + omega * rad.eps * A * rad.drr * cs);
  const double ct = std::cos(theta), st = std::sin(theta);
  ModeField out;
  out.e = {er * ct - et * st, er * st + et * ct, cd(A * rad.rr * cs, 0.0)};
  out.h = {hr * ct - ht * st, hr * st + ht * ct, cd(B * rad.rr * sn, 0.0)};
  for (auto& v : out.e) v *= m.amplitude;
  for (auto& v : out.h) v *= m.amplitude;
  return out;
}

double min_radius(const Params& p) { return 1e-9 * p.a; }

// Angular samples; exact for trigonometric polynomials of degree < n.
int angular_points(int degree) { return 2 * degree + 8; }

// Adaptive bisection over fixed Gauss-Legendre panels; complex-valued so the
// real and imaginary parts share one set of field evaluations.
template <class F>
cd adaptive_panel(F& f, double lo, double hi, cd whole, double tol, int depth) {
  using boost::math::quadrature::gauss;
  const double mid = 0.5 * (lo + hi);
  const cd left = gauss<double, 30>::integrate(f, lo, mid);
  const cd right = gauss<double, 30>::integrate(f, mid, hi);
  if (depth <= 0 || std::abs(left + right - whole) <= tol) return left + right;
  return adaptive_panel(f, lo, mid, left, 0.5 * tol, depth - 1) +
         adaptive_panel(f, mid, hi, right, 0.5 * tol, depth - 1);
}

// Integral over r in [0, r_hi]; the cladding tail is split into panels that
// grow geometrically until exp(-2 gamma r) is negligible.
template <class F>
cd radial_integral(F&& f, double a, double gamma, double r_hi, double tol) {
  using boost::math::quadrature::gauss;
  std::vector<double> edges;
  const int core_panels = 4;
  for (int i = 0; i <= core_panels; ++i) edges.push_back(a * i / core_panels);
  if (r_hi > a) {
    double h = 0.25 * std::min(a, 1.0 / gamma);
    double s = 0.0;
    while (gamma * s < 40.0) {
      s += h;
      edges.push_back(a + s);
      h *= 1.5;
    }
  }
  cd total = 0.0;
  const int panels = static_cast<int>(edges.size()) - 1;
  for (int i = 0; i < panels; ++i) {
    const double lo = edges[i], hi = edges[i + 1];
    const cd whole = gauss<double, 30>::integrate(f, lo, hi);
    total += adaptive_panel(f, lo, hi, whole, tol / panels, 12);
  }
  return total;
}

cd overlap_impl(const GuidedMode& mi, const GuidedMode& mj, bool core_only, double scale) {
  const Params pi = params_of(mi.fiber), pj = params_of(mj.fiber);
  const Coeffs ci = coefficients(mi, pi), cj = coefficients(mj, pj);
  const int n = angular_points(mi.label.nu + mj.label.nu);
  std::function<cd(double)> ring = [&](double r) {
    const double rr = std::max(r, min_radius(pi));
    const Radial ri = radial(mi, pi, rr), rj = radial(mj, pj, rr);
    cd sum = 0.0;
    for (int q = 0; q < n; ++q) {
      const double th = 2.0 * kPi * q / n;
      const ModeField fi = assemble(mi, pi, ci, ri, rr, th);
      const ModeField fj = assemble(mj, pj, cj, rj, rr, th);
      sum += fi.e[0] * std::conj(fj.h[1]) - fi.e[1] * std::conj(fj.h[0]) + std::conj(fj.e[0]) * fi.h[1] -
             std::conj(fj.e[1]) * fi.h[0];
    }
    return sum * (2.0 * kPi / n * r);
  };
  const double gamma = std::min(mi.w, mj.w) / pi.a;
  return 0.25 * radial_integral(ring, pi.a, gamma, core_only ? pi.a : pi.a * 2, 4.0 * scale * 1e-15);
}

}  // namespace

ModeField mode_profile(const GuidedMode& mode, double x, double y) {
  const Params p = params_of(mode.fiber);
  const Coeffs c = coefficients(mode, p);
  const double r = std::max(std::hypot(x, y), min_radius(p));
  const double th = std::atan2(y, x);
  return assemble(mode, p, c, radial(mode, p, r), r, th);
}

ModeField GuidedMode::field(double x, double y) const { return mode_profile(*this, x, y); }

GuidedMode GuidedMode::scaled(double s) const {
  GuidedMode g = *this;
  g.amplitude *= s;
  g.normalization_power *= s * s;
  return g;
}

double mode_power(const GuidedMode& mode) {
  // A first coarse pass sets the absolute tolerance of the adaptive one.
  const double rough = std::abs(overlap_impl(mode, mode, false, 1e12).real());
  const double p = overlap_impl(mode, mode, false, rough).real();
  if (!std::isfinite(p)) throw ModeError("mode power quadrature did not converge for " + mode.label.str());
  return p;
}

double core_power_fraction(const GuidedMode& mode) {
  const double total = mode_power(mode);
  const double inner = overlap_impl(mode, mode, true, total).real();
  return inner / total;
}

cd mode_cross_overlap(const GuidedMode& a, const GuidedMode& b) {
  const double pa = a.normalization_power > 0 ? a.normalization_power : mode_power(a);
  const double pb = b.normalization_power > 0 ? b.normalization_power : mode_power(b);
  return overlap_impl(a, b, false, std::sqrt(pa * pb));
}

std::vector<GuidedMode> solve_modes(const StepIndexFiber& fiber, int scan_points) {
  if (!(fiber.radius > 0.0)) throw ModeError("solve_modes needs a positive radius");
  const Params p = params_of(fiber);
  if (scan_points < 10) throw ModeError("scan_points must be at least 10");
  std::vector<GuidedMode> modes;
  auto add = [&](ModeFamily fam, int nu, const std::vector<double>& roots) {
    int m = 1;
    for (double n : roots) {
      for (int pol = 0; pol < (nu == 0 ? 1 : 2); ++pol) {
        GuidedMode g;
        g.label = {fam, nu, m, pol};
        g.fiber = fiber;
        g.n_eff = n;
        uw(p, n, g.u, g.w);
        modes.push_back(g);
      }
      ++m;
    }
  };
  if (p.v <= 0.0) return modes;
  add(ModeFamily::TE, 0, find_roots(ModeFamily::TE, 0, p, scan_points));
  add(ModeFamily::TM, 0, find_roots(ModeFamily::TM, 0, p, scan_points));
  int empty_run = 0;
  for (int nu = 1; empty_run < 2; ++nu) {
    const auto he = find_roots(ModeFamily::HE, nu, p, scan_points);
    const auto eh = find_roots(ModeFamily::EH, nu, p, scan_points);
    add(ModeFamily::HE, nu, he);
    add(ModeFamily::EH, nu, eh);
    empty_run = (he.empty() && eh.empty()) ? empty_run + 1 : 0;
  }
  std::stable_sort(modes.begin(), modes.end(), [](const GuidedMode& a, const GuidedMode& b) {
    if (a.n_eff != b.n_eff) return a.n_eff > b.n_eff;
    return a.label.polarization < b.label.polarization;
  });
  for (auto& g : modes) g.normalization_power = mode_power(g);
  return modes;
}

double cutoff_v(const ModeLabel& label, double n_core, double n_clad) {
  if (label.m < 1) throw ModeError("radial order starts at 1");
  switch (label.family) {
    case ModeFamily::TE:
    case ModeFamily::TM: return bm::cyl_bessel_j_zero(0.0, label.m);
    case ModeFamily::EH: return bm::cyl_bessel_j_zero(double(label.nu), label.m);
    case ModeFamily::HE: break;
  }
  const int nu = label.nu;
  if (nu == 1) return label.m == 1 ? 0.0 : bm::cyl_bessel_j_zero(1.0, label.m - 1);
  // (n1^2/n2^2 + 1) J_{nu-1}(V) = V/(nu-1) J_nu(V)
  const double c = n_core * n_core / (n_clad * n_clad) + 1.0;
  auto g = [&](double v) { return c * bm::cyl_bessel_j(nu - 1, v) - v / (nu - 1) * bm::cyl_bessel_j(nu, v); };
  const double step = 1e-3;
  int found = 0;
  double v0 = step, g0 = g(v0);
  for (double v1 = 2 * step; v1 < 200.0; v1 += step) {
    const double g1 = g(v1);
    if ((g0 < 0.0) != (g1 < 0.0)) {
      if (++found == label.m) {
        double a = v0, b = v1, ga = g0;
        for (int it = 0; it < 100; ++it) {
          const double mid = 0.5 * (a + b), gm = g(mid);
          if ((gm < 0.0) == (ga < 0.0)) {
            a = mid;
            ga = gm;
          } else {
            b = mid;
          }
        }
        return 0.5 * (a + b);
      }
    }
    v0 = v1;
    g0 = g1;
  }
  throw ModeError("cutoff search failed for " + label.name());
}

}  // namespace nanotip
