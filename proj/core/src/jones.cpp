#include "imapecal/jones.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace imapecal {

ThetaVector ThetaVector::zero(int D, int M) {
  ThetaVector t;
  t.faraday = Eigen::MatrixXd::Zero(D, M);
  t.iono_phase = Eigen::MatrixXd::Zero(D, M);
  t.gains = Eigen::Matrix2Xcd::Zero(2, M);
  return t;
}

ThetaVector ThetaVector::identity(int D, int M) {
  ThetaVector t = zero(D, M);
  t.gains.setOnes();
  return t;
}

Eigen::VectorXd ThetaVector::to_real() const {
  const int D = source_count(), M = antenna_count();
  Eigen::VectorXd x(real_dimension());
  int k = 0;
  for (int i = 0; i < D; ++i)
    for (int p = 0; p < M; ++p) x(k++) = faraday(i, p);
  for (int i = 0; i < D; ++i)
    for (int p = 0; p < M; ++p) x(k++) = iono_phase(i, p);
  for (int p = 0; p < M; ++p) {
    x(k++) = gains(0, p).real();
    x(k++) = gains(0, p).imag();
    x(k++) = gains(1, p).real();
    x(k++) = gains(1, p).imag();
  }
  return x;
}

ThetaVector ThetaVector::from_real(const Eigen::VectorXd& x, int D, int M) {
  if (x.size() != 2 * D * M + 4 * M)
    throw std::invalid_argument("ThetaVector::from_real: dimension mismatch");
  ThetaVector t = zero(D, M);
  int k = 0;
  for (int i = 0; i < D; ++i)
    for (int p = 0; p < M; ++p) t.faraday(i, p) = x(k++);
  for (int i = 0; i < D; ++i)
    for (int p = 0; p < M; ++p) t.iono_phase(i, p) = x(k++);
  for (int p = 0; p < M; ++p) {
    t.gains(0, p) = Complex(x(k), x(k + 1));
    t.gains(1, p) = Complex(x(k + 2), x(k + 3));
    k += 4;
  }
  return t;
}

void ThetaVector::normalize_angles() {
  for (int i = 0; i < source_count(); ++i)
    for (int p = 0; p < antenna_count(); ++p) {
      faraday(i, p) = wrap_angle(faraday(i, p));
      iono_phase(i, p) = wrap_angle(iono_phase(i, p));
    }
}

ThetaVector random_theta(int D, int M, RandomStream& rng,
                         const ThetaDrawOptions& opt) {
  ThetaVector t = ThetaVector::zero(D, M);
  for (int i = 0; i < D; ++i)
    for (int p = 0; p < M; ++p) {
      t.faraday(i, p) = rng.uniform(-opt.faraday_halfwidth, opt.faraday_halfwidth);
      t.iono_phase(i, p) = rng.uniform(-opt.phase_halfwidth, opt.phase_halfwidth);
    }
  for (int p = 0; p < M; ++p)
    for (int c = 0; c < 2; ++c)
      t.gains(c, p) = 1.0 + opt.gain_spread * Complex(rng.normal(), rng.normal());
  return t;
}

ThetaVector perturb_theta(const ThetaVector& theta, double norm,
                          RandomStream& rng) {
  Eigen::VectorXd x = theta.to_real();
  Eigen::VectorXd d(x.size());
  for (int k = 0; k < d.size(); ++k) d(k) = rng.normal();
  if (d.norm() > 0.0) d *= norm / d.norm();
  return ThetaVector::from_real(x + d, theta.source_count(),
                                theta.antenna_count());
}

Mat2 faraday_matrix(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 f;
  f << c, -s, s, c;
  return f;
}

Mat2 faraday_matrix_derivative(double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  Mat2 f;
  f << -s, -c, c, -s;
  return f;
}

Mat2 compose_jones(const ThetaVector& theta, const Mat2& known, int source,
                   int antenna) {
  if (source < 0 || source >= theta.source_count() || antenna < 0 ||
      antenna >= theta.antenna_count())
    throw std::out_of_range("compose_jones: index out of range");
  const Mat2 gain =
      Eigen::Vector2cd(theta.gains(0, antenna), theta.gains(1, antenna))
          .asDiagonal();
  const Complex z = std::polar(1.0, theta.iono_phase(source, antenna));
  return gain * known * (z * faraday_matrix(theta.faraday(source, antenna)));
}

Eigen::VectorXcd VisibilitySet::stacked() const {
  Eigen::VectorXcd x(4 * baseline_count());
  for (int k = 0; k < baseline_count(); ++k) x.segment<4>(4 * k) = data.col(k);
  return x;
}

Vec4 predict_visibility(const ThetaVector& theta, const Scene& scene,
                        double frequency_hz, int p, int q) {
  if (p >= q) throw std::invalid_argument("predict_visibility: need p < q");
  Vec4 out = Vec4::Zero();
  for (int i = 0; i < scene.calibrator_count(); ++i) {
    const Mat2 jp = compose_jones(
        theta, known_effects(scene.array, scene.calibrators[i], frequency_hz, p),
        i, p);
    const Mat2 jq = compose_jones(
        theta, known_effects(scene.array, scene.calibrators[i], frequency_hz, q),
        i, q);
    out += vec2x2(jp * coherency(scene.calibrators[i]) * jq.adjoint());
  }
  return out;
}

VisibilitySet predict_all(const ThetaVector& theta, const Scene& scene,
                          double frequency_hz) {
  return ForwardModel(scene, frequency_hz).predict(theta);
}

ForwardModel::ForwardModel(const Scene& scene, double frequency_hz)
    : scene_(&scene),
      frequency_hz_(frequency_hz),
      D_(scene.calibrator_count()),
      M_(scene.antenna_count()),
      B_(scene.baseline_count()) {
  known_.reserve(D_ * M_);
  flux_.reserve(D_);
  for (int i = 0; i < D_; ++i) {
    flux_.push_back(scene.calibrators[i].flux);
    for (int p = 0; p < M_; ++p)
      known_.push_back(
          known_effects(scene.array, scene.calibrators[i], frequency_hz, p));
  }
}

VisibilitySet ForwardModel::predict(const ThetaVector& theta) const {
  VisibilitySet vis;
  vis.data.resize(4, B_);

  // theta-dependent Jones factors, rebuilt once per call
  std::vector<Mat2> jones(D_ * M_);
  for (int i = 0; i < D_; ++i)
    for (int p = 0; p < M_; ++p)
      jones[i * M_ + p] = compose_jones(theta, known_[i * M_ + p], i, p);

  int k = 0;
  for (int p = 0; p < M_; ++p)
    for (int q = p + 1; q < M_; ++q, ++k) {
      Mat2 acc = Mat2::Zero();
      for (int i = 0; i < D_; ++i)
        acc += 0.5 * flux_[i] * (jones[i * M_ + p] * jones[i * M_ + q].adjoint());
      vis.data.col(k) = vec2x2(acc);
    }
  return vis;
}

namespace {
void append_value(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}
}  // namespace

std::string serialize_theta(const ThetaVector& theta) {
  const int D = theta.source_count(), M = theta.antenna_count();
  std::string out = "theta v1 " + std::to_string(D) + ' ' + std::to_string(M) + '\n';
  for (int i = 0; i < D; ++i)
    for (int p = 0; p < M; ++p) {
      out += "faraday " + std::to_string(i) + ' ' + std::to_string(p) + ' ';
      append_value(out, theta.faraday(i, p));
      out += '\n';
    }
  for (int i = 0; i < D; ++i)
    for (int p = 0; p < M; ++p) {
      out += "iono_phase " + std::to_string(i) + ' ' + std::to_string(p) + ' ';
      append_value(out, theta.iono_phase(i, p));
      out += '\n';
    }
  for (int p = 0; p < M; ++p)
    for (int c = 0; c < 2; ++c) {
      out += "gain " + std::to_string(p) + ' ' + std::to_string(c) + ' ';
      append_value(out, theta.gains(c, p).real());
      out += ' ';
      append_value(out, theta.gains(c, p).imag());
      out += '\n';
    }
  return out;
}

ThetaVector parse_theta(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag, version;
  int D = 0, M = 0;
  in >> tag >> version >> D >> M;
  if (!in || tag != "theta" || version != "v1")
    throw std::runtime_error("parse_theta: bad header");
  ThetaVector t = ThetaVector::zero(D, M);
  while (in >> tag) {
    if (tag == "faraday" || tag == "iono_phase") {
      int i = 0, p = 0;
      double v = 0;
      in >> i >> p >> v;
      (tag == "faraday" ? t.faraday : t.iono_phase)(i, p) = v;
    } else if (tag == "gain") {
      int p = 0, c = 0;
      double re = 0, im = 0;
      in >> p >> c >> re >> im;
      t.gains(c, p) = Complex(re, im);
    } else {
      throw std::runtime_error("parse_theta: unknown tag " + tag);
    }
  }
  return t;
}

std::string serialize_visibilities(const VisibilitySet& x) {
  std::string out = "visibilities v1 " + std::to_string(x.baseline_count()) + '\n';
  for (int k = 0; k < x.baseline_count(); ++k) {
    for (int c = 0; c < 4; ++c) {
      if (c > 0) out += ' ';
      append_value(out, x.data(c, k).real());
      out += ' ';
      append_value(out, x.data(c, k).imag());
    }
    out += '\n';
  }
  return out;
}

VisibilitySet parse_visibilities(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string tag, version;
  int B = 0;
  in >> tag >> version >> B;
  if (!in || tag != "visibilities" || version != "v1" || B < 0)
    throw std::runtime_error("parse_visibilities: bad header");
  VisibilitySet x;
  x.data.resize(4, B);
  for (int k = 0; k < B; ++k) {
    for (int c = 0; c < 4; ++c) {
      double re = 0, im = 0;
      in >> re >> im;
      x.data(c, k) = Complex(re, im);
    }
  }
  if (!in) throw std::runtime_error("parse_visibilities: truncated input");
  return x;
}

}  // namespace imapecal
