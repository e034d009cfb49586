#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace kiqt {

/// Dense 2-D plane of samples, row-major so it maps 1:1 onto the on-disk
/// payload layout and onto flattened (channel, row*W + col) feature maps.
template <typename Scalar>
using PlaneT = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneT<float>;
using Index = Eigen::Index;

/// Domain tag carried by every slice (and by the KIQT file header).
enum class Domain : std::uint8_t { Image = 0, KSpace = 1, Magnitude = 2 };

enum class MaskPattern { PseudoRadial, Cartesian, Full };

/// Which representation a model consumes: paired k-space channels or a
/// single magnitude image.
enum class IqtDomain { KSpace, Spatial };

/// In-distribution vs shifted ultra-low-field parameter regime.
enum class Regime { InD, Ood };

class IoError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class FormatError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// One complex-valued slice stored as paired real/imaginary planes.
/// Three exact 2x poolings require H and W divisible by 8.
struct ComplexSlice {
  Plane real;
  Plane imag;
  Domain domain = Domain::Image;
  double scale = 1.0;

  Index rows() const { return real.rows(); }
  Index cols() const { return real.cols(); }
};

/// Nonnegative magnitude slice, normalized to [0, 1] at creation.
struct MagnitudeSlice {
  Plane data;
  double scale = 1.0;

  Index rows() const { return data.rows(); }
  Index cols() const { return data.cols(); }
};

inline bool pool_compatible(Index h, Index w) { return h > 0 && w > 0 && h % 8 == 0 && w % 8 == 0; }

inline void validate(const ComplexSlice& s) {
  if (s.real.rows() != s.imag.rows() || s.real.cols() != s.imag.cols())
    throw ShapeError("ComplexSlice: real/imag dimensions differ");
  if (!pool_compatible(s.rows(), s.cols()))
    throw ShapeError("ComplexSlice: H and W must be positive and divisible by 8, got " +
                     std::to_string(s.rows()) + "x" + std::to_string(s.cols()));
  if (!(s.scale > 0.0)) throw ShapeError("ComplexSlice: scale must be positive");
  if (s.domain == Domain::Magnitude) throw ShapeError("ComplexSlice: domain must be IMAGE or KSPACE");
}

inline void validate(const MagnitudeSlice& s) {
  if (s.rows() <= 0 || s.cols() <= 0) throw ShapeError("MagnitudeSlice: empty plane");
  if (!(s.scale > 0.0)) throw ShapeError("MagnitudeSlice: scale must be positive");
  if ((s.data.array() < 0.0f).any()) throw ShapeError("MagnitudeSlice: negative values");
}

/// Promote a magnitude image to a complex image slice (zero imaginary part).
inline ComplexSlice to_complex(const MagnitudeSlice& m) {
  ComplexSlice out;
  out.real = m.data;
  out.imag = Plane::Zero(m.rows(), m.cols());
  out.domain = Domain::Image;
  out.scale = m.scale;
  return out;
}

inline Plane magnitude_of(const ComplexSlice& s) {
  return (s.real.array().square() + s.imag.array().square()).sqrt().matrix();
}

inline const char* to_string(MaskPattern p) {
  switch (p) {
    case MaskPattern::PseudoRadial: return "pseudo_radial";
    case MaskPattern::Cartesian: return "cartesian";
    case MaskPattern::Full: return "full";
  }
  return "?";
}

inline const char* to_string(IqtDomain d) { return d == IqtDomain::KSpace ? "kspace" : "spatial"; }

inline const char* to_string(Regime r) { return r == Regime::InD ? "ind" : "ood"; }

}  // namespace kiqt
