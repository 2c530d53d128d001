#pragma once

// Test inputs and direct-summation oracles. Each oracle evaluates one
// output cell from the definition with plain loops over the input cells.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "amlab/operators.hpp"

namespace amlab::test {

inline GridFunction interval(const Grid& g, double a, double b) {
  return GridFunction::sample(g, [&](const Point& x) { return x[0] >= a && x[0] < b ? 1.0 : 0.0; });
}

inline GridFunction gaussian(const Grid& g, double sigma = 1.0, Point c = {0.0, 0.0}) {
  return GridFunction::sample(g, [&](const Point& x) {
    const double d = distance(x, c, g.dim());
    return std::exp(-d * d / (2.0 * sigma * sigma));
  });
}

/// Random smooth-ish field supported in [-L/2, L/2]^n.
inline GridFunction random_field(const Grid& g, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(-0.4, 0.4);
  const double L = g.half_width();
  const int bumps = 3;
  std::vector<Point> centers;
  std::vector<double> amps, widths;
  for (int k = 0; k < bumps; ++k) {
    centers.push_back({u(rng) * L, g.dim() == 2 ? u(rng) * L : 0.0});
    amps.push_back(z(rng));
    widths.push_back(0.05 * L + std::abs(u(rng)) * 0.2 * L);
  }
  std::vector<double> noise(g.size());
  for (double& v : noise) v = 0.1 * z(rng);
  auto f = GridFunction::sample(g, [&](const Point& x) {
    double v = 0.0;
    for (int k = 0; k < bumps; ++k) {
      const double d = distance(x, centers[k], g.dim());
      v += amps[k] * std::exp(-d * d / (2.0 * widths[k] * widths[k]));
    }
    return v;
  });
  for (std::size_t i = 0; i < f.size(); ++i) {
    const Point x = f.grid().point(i);
    if (std::max(std::abs(x[0]), std::abs(x[1])) < L / 2) f[i] += noise[i];
    else f[i] = 0.0;
  }
  return f;
}

inline constexpr double pi = std::numbers::pi;

inline double hilbert_direct(const GridFunction& f, std::size_t i, double eps) {
  const Grid& g = f.grid();
  const double h = g.spacing();
  double s = 0.0;
  for (std::size_t j = 0; j < g.points(); ++j) {
    const double u = g.coord(i) - g.coord(j);
    if (std::abs(u) <= eps * (1.0 + 1e-12) || j == i) continue;
    s += f[j] / (pi * u);
  }
  return s * h;
}

inline double rough_direct(const GridFunction& f, std::size_t i, double eps) {
  const Grid& g = f.grid();
  const Point x = g.point(i);
  double s = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    const Point y = g.point(j);
    const double u1 = x[0] - y[0], u2 = x[1] - y[1];
    const double r = std::sqrt(u1 * u1 + u2 * u2);
    if (j == i || r <= eps * (1.0 + 1e-12)) continue;
    s += (u1 / r) / (r * r) * f[j];
  }
  return s * g.cell_volume();
}

// F_t at one cell for every requested t, with an optional commutator symbol.
inline std::vector<double> spherical_means(const GridFunction& f, const GridFunction* b, std::size_t i,
                                    const std::vector<double>& ts) {
  const Grid& g = f.grid();
  const Point x = g.point(i);
  std::vector<double> out(ts.size(), 0.0);
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (j == i) continue;
    const Point y = g.point(j);
    const double u1 = x[0] - y[0], u2 = x[1] - y[1];
    const double r = std::sqrt(u1 * u1 + u2 * u2);
    const double v = (u1 / r) / r * f[j] * (b ? (*b)[i] - (*b)[j] : 1.0);
    for (std::size_t k = 0; k < ts.size(); ++k)
      if (r <= ts[k] * (1.0 + 1e-12)) out[k] += v;
  }
  for (double& v : out) v *= g.cell_volume();
  return out;
}

// mu at one cell on the library's t-grid: midpoint rule per interval plus
// the exact tail.
inline double marcinkiewicz_same_t(const GridFunction& f, const GridFunction* b, std::size_t i, const TGrid& t) {
  std::vector<double> ts;
  for (std::size_t k = 0; k < t.intervals(); ++k) ts.push_back(std::sqrt(t.nodes[k] * t.nodes[k + 1]));
  ts.push_back(1e300);
  const auto F = spherical_means(f, b, i, ts);
  double s = 0.0;
  for (std::size_t k = 0; k < t.intervals(); ++k)
    s += F[k] * F[k] * std::log(t.nodes[k + 1] / t.nodes[k]) / (ts[k] * ts[k]);
  s += F.back() * F.back() * 0.5 / (t.nodes.back() * t.nodes.back());
  return std::sqrt(s);
}

// mu at one cell integrated exactly in t: F_t is constant between the
// sorted offset distances, and int_a^b dt/t^3 = (a^-2 - b^-2)/2.
inline double marcinkiewicz_exact_t(const GridFunction& f, std::size_t i) {
  const Grid& g = f.grid();
  const Point x = g.point(i);
  std::vector<std::pair<double, double>> terms;
  for (std::size_t j = 0; j < g.size(); ++j) {
    if (j == i || f[j] == 0.0) continue;
    const Point y = g.point(j);
    const double u1 = x[0] - y[0], u2 = x[1] - y[1];
    const double r = std::sqrt(u1 * u1 + u2 * u2);
    terms.emplace_back(r, (u1 / r) / r * f[j] * g.cell_volume());
  }
  std::sort(terms.begin(), terms.end());
  double F = 0.0, s = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    F += terms[k].second;
    const double a = terms[k].first;
    const double next = k + 1 < terms.size() ? terms[k + 1].first : INFINITY;
    if (next == a) continue;
    s += F * F * 0.5 * (1.0 / (a * a) - (std::isinf(next) ? 0.0 : 1.0 / (next * next)));
  }
  return std::sqrt(s);
}

// Zero-padded multiplier by explicit DFT sums on a P = 2N grid.
inline std::vector<double> multiplier_direct(const GridFunction& f, const std::vector<std::size_t>& probes, double delta,
                                      double R) {
  const Grid& g = f.grid();
  const std::size_t n = g.points(), P = 2 * n;
  const double step = 2.0 * pi / (static_cast<double>(P) * g.spacing());
  auto freq = [&](std::size_t k) { return (k < P / 2 ? double(k) : double(k) - double(P)) * step; };
  auto sym = [&](double xi2) {
    const double s = 1.0 - xi2 / (R * R);
    return s > 0.0 ? std::pow(s, delta) : 0.0;
  };
  std::vector<double> out;
  if (g.dim() == 1) {
    std::vector<std::complex<double>> F(P);
    for (std::size_t k = 0; k < P; ++k)
      for (std::size_t j = 0; j < n; ++j) F[k] += f[j] * std::polar(1.0, -2.0 * pi * double(k * j) / double(P));
    for (std::size_t i : probes) {
      std::complex<double> s;
      for (std::size_t k = 0; k < P; ++k)
        s += F[k] * sym(freq(k) * freq(k)) * std::polar(1.0, 2.0 * pi * double(k * i) / double(P));
      out.push_back(s.real() / double(P));
    }
    return out;
  }
  std::vector<std::complex<double>> F(P * P);
  for (std::size_t a = 0; a < P; ++a)
    for (std::size_t c = 0; c < P; ++c) {
      std::complex<double> s;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
          s += f[g.flat(i, j)] * std::polar(1.0, -2.0 * pi * double(a * i + c * j) / double(P));
      F[a * P + c] = s;
    }
  for (std::size_t p : probes) {
    const auto ij = g.index(p);
    std::complex<double> s;
    for (std::size_t a = 0; a < P; ++a)
      for (std::size_t c = 0; c < P; ++c)
        s += F[a * P + c] * sym(freq(a) * freq(a) + freq(c) * freq(c)) *
             std::polar(1.0, 2.0 * pi * double(a * ij[0] + c * ij[1]) / double(P));
    out.push_back(s.real() / double(P * P));
  }
  return out;
}

inline std::vector<std::size_t> probes(const Grid& g, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, g.size() - 1);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < count; ++k) out.push_back(pick(rng));
  return out;
}

}  // namespace amlab::test
