#include "nanotip/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

namespace nanotip {

namespace {

using cd = std::complex<double>;

cd lerp2(const std::vector<cd>& f, const PlanePhasors& p, int a, int b, double s, double t) {
  const std::size_t i00 = p.at(a, b), i10 = p.at(a + 1, b), i01 = p.at(a, b + 1), i11 = p.at(a + 1, b + 1);
  return (1 - s) * (1 - t) * f[i00] + s * (1 - t) * f[i10] + (1 - s) * t * f[i01] + s * t * f[i11];
}

std::optional<double> opt_num(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

}  // namespace

std::vector<cd> mode_amplitudes(const PlanePhasors& mon, const std::vector<GuidedMode>& modes, double axis_x,
                                double axis_y) {
  if (mon.normal != 2) throw CouplingError("mode decomposition needs a monitor normal to the waveguide axis (z)");
  if (mon.n1 < 2 || mon.n2 < 2) throw CouplingError("monitor has too few samples for a decomposition");
  const double h = mon.spacing;
  const double x_lo = mon.t1_origin - axis_x, x_hi = x_lo + (mon.n1 - 1) * h;
  const double y_lo = mon.t2_origin - axis_y, y_hi = y_lo + (mon.n2 - 1) * h;
  for (const auto& m : modes) {
    const double reach = 1.5 * m.fiber.radius;
    if (x_lo > -reach || x_hi < reach || y_lo > -reach || y_hi < reach) {
      throw CouplingError("monitor does not cover the cross-section of mode " + m.label.str());
    }
  }
  std::vector<cd> acc(modes.size(), 0.0);
  const double g = 0.5 / std::sqrt(3.0);
  const double nodes[2] = {0.5 - g, 0.5 + g};
  const double w = 0.25 * h * h;  // four equal weights per cell
  for (int b = 0; b + 1 < mon.n2; ++b) {
    for (int a = 0; a + 1 < mon.n1; ++a) {
      for (double t : nodes) {
        for (double s : nodes) {
          const cd ex = lerp2(mon.e1, mon, a, b, s, t), ey = lerp2(mon.e2, mon, a, b, s, t);
          const cd hx = lerp2(mon.h1, mon, a, b, s, t), hy = lerp2(mon.h2, mon, a, b, s, t);
          const double x = x_lo + (a + s) * h, y = y_lo + (b + t) * h;
          for (std::size_t q = 0; q < modes.size(); ++q) {
            const ModeField f = modes[q].field(x, y);
            acc[q] += w * (ex * std::conj(f.h[1]) - ey * std::conj(f.h[0]) + std::conj(f.e[0]) * hy -
                           std::conj(f.e[1]) * hx);
          }
        }
      }
    }
  }
  for (std::size_t q = 0; q < modes.size(); ++q) {
    const double pm = modes[q].normalization_power > 0 ? modes[q].normalization_power : mode_power(modes[q]);
    acc[q] *= 0.25 / pm;
  }
  return acc;
}

cd mode_amplitude(const PlanePhasors& monitor, const GuidedMode& mode, double axis_x, double axis_y) {
  return mode_amplitudes(monitor, {mode}, axis_x, axis_y).front();
}

CouplingReport build_report(const RunKey& key, const RunMeasurements& m, const std::vector<GuidedMode>& modes,
                            double shutoff) {
  CouplingReport r;
  r.key = key;
  r.p_total = m.p_total;
  r.p_flux = m.p_flux;
  r.p_vacuum = m.p_vacuum;
  r.converged = m.converged;
  r.steps = m.steps;
  r.windows = m.windows;
  r.last_change = m.last_change;
  r.shutoff = shutoff;
  if (!(m.p_total > 0.0)) throw CouplingError("emitted power must be positive");
  if (!modes.empty()) {
    if (m.monitor == nullptr) throw CouplingError("modal analysis requested without monitor phasors");
    const auto amps = mode_amplitudes(*m.monitor, modes);
    for (std::size_t q = 0; q < modes.size(); ++q) {
      ModePower mp;
      mp.label = modes[q].label;
      mp.n_eff = modes[q].n_eff;
      mp.amplitude = amps[q];
      mp.power = std::norm(amps[q]) * modes[q].normalization_power;
      r.per_mode.push_back(mp);
    }
  }
  double guided = 0.0;
  for (const auto& mp : r.per_mode) guided += mp.power;
  r.eta_flux = m.p_flux / m.p_total;
  r.eta_modal = guided / m.p_total;
  r.residual = r.eta_flux - r.eta_modal;
  r.purcell_ratio = m.p_vacuum > 0 ? m.p_total / m.p_vacuum : 0.0;

  if (!r.converged) r.flags.push_back("not converged");
  if (r.eta_flux > 1.0 + kEtaAllowance) r.flags.push_back("eta_flux exceeds 1");
  if (r.eta_flux < -kEtaAllowance) r.flags.push_back("eta_flux negative");
  if (r.residual < -kEtaAllowance) r.flags.push_back("eta_modal exceeds eta_flux");
  return r;
}

OrientationAverage orientation_average(const std::vector<CouplingReport>& reports) {
  if (reports.size() != 3) throw CouplingError("orientation average needs exactly three reports");
  std::set<Orientation> seen;
  const RunKey& k0 = reports.front().key;
  OrientationAverage out;
  for (const auto& r : reports) {
    const RunKey& k = r.key;
    if (k.case_id != k0.case_id || k.a != k0.a || k.b_d != k0.b_d || k.d != k0.d || k.preset != k0.preset ||
        k.grid_step != k0.grid_step) {
      throw CouplingError("orientation average over mismatched scenes");
    }
    if (!seen.insert(k.orientation).second) throw CouplingError("duplicate orientation in average");
    out.eta += r.eta_flux / 3.0;
    out.eta_modal += r.eta_modal / 3.0;
    out.per_orientation.emplace_back(k.orientation, r.eta_flux);
  }
  return out;
}

nlohmann::json to_json(const CouplingReport& r) {
  nlohmann::json modes = nlohmann::json::array();
  for (const auto& mp : r.per_mode) {
    modes.push_back({{"label", mp.label.str()},
                     {"family", to_string(mp.label.family)},
                     {"nu", mp.label.nu},
                     {"m", mp.label.m},
                     {"polarization", mp.label.polarization},
                     {"n_eff", mp.n_eff},
                     {"amplitude", {mp.amplitude.real(), mp.amplitude.imag()}},
                     {"power", mp.power}});
  }
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"case", r.key.case_id},
          {"a", opt(r.key.a)},
          {"b_D", opt(r.key.b_d)},
          {"d", opt(r.key.d)},
          {"orientation", to_string(r.key.orientation)},
          {"preset", r.key.preset},
          {"grid_step", r.key.grid_step},
          {"P_total", r.p_total},
          {"P_flux", r.p_flux},
          {"P_vacuum", r.p_vacuum},
          {"per_mode", modes},
          {"eta_flux", r.eta_flux},
          {"eta_modal", r.eta_modal},
          {"residual", r.residual},
          {"purcell_ratio", r.purcell_ratio},
          {"converged", r.converged},
          {"steps", r.steps},
          {"windows", r.windows},
          {"last_change", r.last_change},
          {"shutoff", r.shutoff},
          {"flags", r.flags}};
}

CouplingReport report_from_json(const nlohmann::json& j) {
  CouplingReport r;
  r.key.case_id = j.at("case").get<std::string>();
  r.key.a = opt_num(j, "a");
  r.key.b_d = opt_num(j, "b_D");
  r.key.d = opt_num(j, "d");
  r.key.orientation = parse_orientation(j.at("orientation").get<std::string>());
  r.key.preset = j.at("preset").get<std::string>();
  r.key.grid_step = j.at("grid_step").get<double>();
  r.p_total = j.at("P_total").get<double>();
  r.p_flux = j.at("P_flux").get<double>();
  r.p_vacuum = j.at("P_vacuum").get<double>();
  for (const auto& m : j.at("per_mode")) {
    ModePower mp;
    const std::string fam = m.at("family").get<std::string>();
    mp.label.family = fam == "TE" ? ModeFamily::TE : fam == "TM" ? ModeFamily::TM : fam == "EH" ? ModeFamily::EH
                                                                                                  : ModeFamily::HE;
    mp.label.nu = m.at("nu").get<int>();
    mp.label.m = m.at("m").get<int>();
    mp.label.polarization = m.at("polarization").get<int>();
    mp.n_eff = m.at("n_eff").get<double>();
    mp.amplitude = {m.at("amplitude").at(0).get<double>(), m.at("amplitude").at(1).get<double>()};
    mp.power = m.at("power").get<double>();
    r.per_mode.push_back(mp);
  }
  r.eta_flux = j.at("eta_flux").get<double>();
  r.eta_modal = j.at("eta_modal").get<double>();
  r.residual = j.at("residual").get<double>();
  r.purcell_ratio = j.at("purcell_ratio").get<double>();
  r.converged = j.at("converged").get<bool>();
  r.steps = j.at("steps").get<long>();
  r.windows = j.at("windows").get<int>();
  r.last_change = j.at("last_change").get<double>();
  r.shutoff = j.at("shutoff").get<double>();
  r.flags = j.at("flags").get<std::vector<std::string>>();
  return r;
}

std::string format_sig6(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  if (v == 0.0) return "0.00000";
  const int mag = static_cast<int>(std::floor(std::log10(std::abs(v))));
  int decimals = std::max(0, 5 - mag);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  // Rounding can carry into a new leading digit (9.999995 -> 10.00000).
  const double back = std::strtod(buf, nullptr);
  if (back != 0.0 && static_cast<int>(std::floor(std::log10(std::abs(back)))) > mag && decimals > 0) {
    std::snprintf(buf, sizeof buf, "%.*f", decimals - 1, v);
  }
  return buf;
}

std::string report_csv_header() {
  return "case,a,b_D,d,orientation,eta_flux,eta_modal,P_total,purcell_ratio,converged,preset";
}

std::string report_csv_row(const CouplingReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? format_sig6(*v) : std::string(); };
  return r.key.case_id + "," + opt(r.key.a) + "," + opt(r.key.b_d) + "," + opt(r.key.d) + "," +
         to_string(r.key.orientation) + "," + format_sig6(r.eta_flux) + "," + format_sig6(r.eta_modal) + "," +
         format_sig6(r.p_total) + "," + format_sig6(r.purcell_ratio) + "," + (r.converged ? "true" : "false") +
         "," + r.key.preset;
}

}  // namespace nanotip
