#include <algorithm>
#include <cmath>
#include <sstream>

#include "syrisk/io.hpp"

namespace syrisk {

namespace {

constexpr double kSize = 600.0;
constexpr double kPad = 50.0;

struct Frame {
  double xr;  // half-width in d1 units
  double yr;  // half-height in d2 units
  double px(double d1) const { return kPad + (d1 + xr) / (2.0 * xr) * (kSize - 2.0 * kPad); }
  double py(double d2) const { return kSize - kPad - (d2 + yr) / (2.0 * yr) * (kSize - 2.0 * kPad); }
};

std::string pt(const Frame& f, double d1, double d2) {
  std::ostringstream os;
  os.precision(6);
  os << f.px(d1) << ',' << f.py(d2);
  return os.str();
}

}  // namespace

std::string zone_svg(MoScore dbar, const HacEstimate& omega, std::size_t n, double nu) {
  if (!(omega.s11 > 0.0)) throw DegenerateCovarianceError("zone figure needs s11 > 0");
  if (n == 0) throw InsufficientDataError("zone figure needs n > 0");
  const HacEstimate o = repair_psd(omega);
  const LevelAdjustment lv = adjust_level(nu);
  const double r = std::sqrt(lv.chi2_crit / static_cast<double>(n));
  const double e1 = std::sqrt(o.s11) * r;
  const double e2 = std::sqrt(o.s22) * r;
  const double k = o.s12 / o.s11;
  const TrafficZone zone = classify_zone(dbar, omega, n, nu);

  Frame f{std::max(1.6 * e1, 1.2 * std::abs(dbar.s1)), 0.0};
  f.yr = std::max({1.6 * e2, 1.2 * std::abs(dbar.s2), 1.2 * std::abs(k) * f.xr});

  // Cholesky factor of the repaired covariance
  const double l11 = std::sqrt(o.s11);
  const double l21 = o.s12 / l11;
  const double l22 = std::sqrt(std::max(0.0, o.s22 - l21 * l21));

  std::ostringstream os;
  os.precision(6);
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n"
     << "<rect x=\"0\" y=\"0\" width=\"600\" height=\"600\" fill=\"white\"/>\n";
  const double top = f.yr, bot = -f.yr;
  auto poly = [&](const std::vector<std::pair<double, double>>& v, const char* fill, const char* id) {
    os << "<polygon id=\"" << id << "\" fill=\"" << fill << "\" points=\"";
    for (std::size_t i = 0; i < v.size(); ++i) os << (i ? " " : "") << pt(f, v[i].first, v[i].second);
    os << "\"/>\n";
  };
  poly({{-f.xr, bot}, {-e1, bot}, {-e1, top}, {-f.xr, top}}, "#e06666", "zone-red");
  poly({{e1, bot}, {f.xr, bot}, {f.xr, top}, {e1, top}}, "#b7b7b7", "zone-grey");
  poly({{-e1, -k * e1}, {e1, k * e1}, {e1, top}, {-e1, top}}, "#93c47d", "zone-green");
  poly({{-e1, bot}, {e1, bot}, {e1, k * e1}, {-e1, -k * e1}}, "#f6b26b", "zone-orange");

  os << "<polygon id=\"zone-yellow\" fill=\"#ffe599\" stroke=\"black\" stroke-width=\"1.5\" points=\"";
  constexpr int kSteps = 180;
  for (int i = 0; i < kSteps; ++i) {
    const double t = 2.0 * M_PI * i / kSteps;
    const double a = std::cos(t), b = std::sin(t);
    os << (i ? " " : "") << pt(f, r * l11 * a, r * (l21 * a + l22 * b));
  }
  os << "\"/>\n";

  os << "<line x1=\"" << f.px(-e1) << "\" y1=\"" << f.py(-k * e1) << "\" x2=\"" << f.px(e1)
     << "\" y2=\"" << f.py(k * e1) << "\" stroke=\"black\" stroke-dasharray=\"6,4\"/>\n";
  os << "<line x1=\"" << kPad << "\" y1=\"" << f.py(0) << "\" x2=\"" << kSize - kPad << "\" y2=\""
     << f.py(0) << "\" stroke=\"#444\" stroke-width=\"0.8\"/>\n";
  os << "<line x1=\"" << f.px(0) << "\" y1=\"" << kPad << "\" x2=\"" << f.px(0) << "\" y2=\""
     << kSize - kPad << "\" stroke=\"#444\" stroke-width=\"0.8\"/>\n";
  os << "<circle id=\"marker\" cx=\"" << f.px(dbar.s1) << "\" cy=\"" << f.py(dbar.s2)
     << "\" r=\"6\" fill=\"black\"/>\n";
  os << "<text x=\"300\" y=\"30\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
     << "zone " << to_string(zone) << ", nu = " << nu << ", n = " << n << "</text>\n";
  os << "<text x=\"300\" y=\"590\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << "mean VaR score difference</text>\n";
  os << "<text x=\"18\" y=\"300\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\" "
     << "transform=\"rotate(-90 18 300)\">mean systemic score difference</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace syrisk
