#include "imapecal/scene.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace imapecal {

int ArrayConfig::baseline_index(int p, int q) const {
  const int m = antenna_count();
  if (p < 0 || q <= p || q >= m)
    throw std::invalid_argument("baseline_index: need 0 <= p < q < M");
  return p * (2 * m - p - 1) / 2 + (q - p - 1);
}

std::pair<int, int> ArrayConfig::baseline_antennas(int k) const {
  const int m = antenna_count();
  if (k < 0 || k >= baseline_count())
    throw std::invalid_argument("baseline_antennas: index out of range");
  int p = 0;
  int rowlen = m - 1;
  while (k >= rowlen) {
    k -= rowlen;
    ++p;
    --rowlen;
  }
  return {p, p + 1 + k};
}

namespace {

Source draw_source(RandomStream& rng, double halfwidth, double flux_lo,
                   double flux_hi, SourceRole role) {
  Source s;
  do {
    s.l = rng.uniform(-halfwidth, halfwidth);
    s.m = rng.uniform(-halfwidth, halfwidth);
  } while (s.l * s.l + s.m * s.m > 1.0);
  s.flux = rng.uniform(flux_lo, flux_hi);
  s.role = role;
  return s;
}

void draw_background(Scene& scene, RandomStream& rng, int Dp,
                     const SceneOptions& opt) {
  double weakest = scene.calibrators.empty() ? 1.0 : scene.calibrators[0].flux;
  for (const Source& s : scene.calibrators) weakest = std::min(weakest, s.flux);

  const int M = scene.antenna_count();
  scene.background.clear();
  scene.background.reserve(Dp);
  scene.background_faraday.resize(Dp, M);
  scene.background_phase.resize(Dp, M);
  for (int i = 0; i < Dp; ++i) {
    scene.background.push_back(
        draw_source(rng, opt.direction_halfwidth, opt.background_flux_min * weakest,
                    opt.background_flux_max * weakest, SourceRole::Background));
    for (int p = 0; p < M; ++p) {
      scene.background_faraday(i, p) =
          rng.uniform(-opt.background_angle_jitter, opt.background_angle_jitter);
      scene.background_phase(i, p) =
          rng.uniform(-opt.background_angle_jitter, opt.background_angle_jitter);
    }
  }
}

}  // namespace

Scene make_scene(std::uint64_t seed, int M, int D, int Dp,
                 const SceneOptions& opt) {
  if (M < 2) throw std::invalid_argument("make_scene: need at least 2 antennas");
  if (D < 1) throw std::invalid_argument("make_scene: need at least 1 calibrator");
  if (Dp < 0) throw std::invalid_argument("make_scene: negative background count");

  Scene scene;
  scene.seed = seed;
  RandomStream rng = RandomStream::substream(seed, 0x5ce4e);

  scene.array.antenna_positions.reserve(M);
  for (int p = 0; p < M; ++p)
    scene.array.antenna_positions.emplace_back(rng.uniform(0.0, opt.extent_m),
                                               rng.uniform(0.0, opt.extent_m));

  scene.calibrators.reserve(D);
  for (int i = 0; i < D; ++i)
    scene.calibrators.push_back(draw_source(rng, opt.direction_halfwidth,
                                            opt.calibrator_flux_min,
                                            opt.calibrator_flux_max,
                                            SourceRole::Calibrator));

  draw_background(scene, rng, Dp, opt);
  return scene;
}

void redraw_background(Scene& scene, std::uint64_t seed, const SceneOptions& opt) {
  RandomStream rng = RandomStream::substream(seed, 0xb9d);
  draw_background(scene, rng, scene.background_count(), opt);
}

Mat2 coherency(const Source& source) {
  if (source.flux < 0.0) throw std::invalid_argument("coherency: negative flux");
  return 0.5 * source.flux * Mat2::Identity();
}

Mat2 known_effects(const ArrayConfig& array, const Source& source,
                   double frequency_hz, int antenna) {
  const Eigen::Vector2d& pos = array.antenna_positions.at(antenna);
  const double phase = -2.0 * kPi * frequency_hz / kSpeedOfLight *
                       (pos.x() * source.l + pos.y() * source.m);
  return std::polar(1.0, phase) * Mat2::Identity();
}

namespace {

void print_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

void print_line(std::string& out, const char* tag,
                std::initializer_list<double> values) {
  out += tag;
  for (double v : values) {
    out += ' ';
    print_double(out, v);
  }
  out += '\n';
}

}  // namespace

std::string serialize_scene(const Scene& scene) {
  std::string out;
  out += "scene v1\n";
  out += "seed " + std::to_string(scene.seed) + '\n';
  out += "antennas " + std::to_string(scene.antenna_count()) + '\n';
  for (const auto& p : scene.array.antenna_positions)
    print_line(out, "antenna", {p.x(), p.y()});
  out += "calibrators " + std::to_string(scene.calibrator_count()) + '\n';
  for (const Source& s : scene.calibrators)
    print_line(out, "calibrator", {s.l, s.m, s.flux});
  out += "background " + std::to_string(scene.background_count()) + '\n';
  for (int i = 0; i < scene.background_count(); ++i) {
    const Source& s = scene.background[i];
    print_line(out, "background_source", {s.l, s.m, s.flux});
    for (int p = 0; p < scene.antenna_count(); ++p)
      print_line(out, "background_jitter",
                 {scene.background_faraday(i, p), scene.background_phase(i, p)});
  }
  return out;
}

Scene parse_scene(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag;
  auto expect = [&](const char* want) {
    in >> tag;
    if (!in || tag != want)
      throw std::runtime_error(std::string("parse_scene: expected ") + want);
  };

  expect("scene");
  expect("v1");
  Scene scene;
  expect("seed");
  in >> scene.seed;
  expect("antennas");
  int m = 0;
  in >> m;
  for (int p = 0; p < m; ++p) {
    expect("antenna");
    double x = 0, y = 0;
    in >> x >> y;
    scene.array.antenna_positions.emplace_back(x, y);
  }
  expect("calibrators");
  int d = 0;
  in >> d;
  for (int i = 0; i < d; ++i) {
    expect("calibrator");
    Source s;
    in >> s.l >> s.m >> s.flux;
    s.role = SourceRole::Calibrator;
    scene.calibrators.push_back(s);
  }
  expect("background");
  int dp = 0;
  in >> dp;
  scene.background_faraday.resize(dp, m);
  scene.background_phase.resize(dp, m);
  for (int i = 0; i < dp; ++i) {
    expect("background_source");
    Source s;
    in >> s.l >> s.m >> s.flux;
    s.role = SourceRole::Background;
    scene.background.push_back(s);
    for (int p = 0; p < m; ++p) {
      expect("background_jitter");
      in >> scene.background_faraday(i, p) >> scene.background_phase(i, p);
    }
  }
  if (!in) throw std::runtime_error("parse_scene: truncated input");
  return scene;
}

}  // namespace imapecal
