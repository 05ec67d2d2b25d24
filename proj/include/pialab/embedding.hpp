#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace pialab {

inline constexpr int kTimeEmbedDim = 16;

// Sinusoidal embedding of normalized time u (t/T for discrete schedules, t
// itself in continuous mode). The angular scale of 100 puts adjacent discrete
// steps of a T=100 schedule about one radian apart at the fastest frequency;
// larger scales alias at desk-scale T and destroy time resolution.
inline Eigen::RowVectorXd time_embedding(double u) {
  constexpr int half = kTimeEmbedDim / 2;
  Eigen::RowVectorXd e(kTimeEmbedDim);
  for (int i = 0; i < half; ++i) {
    double freq = std::pow(10000.0, -static_cast<double>(i) / (half - 1));
    double ang = 100.0 * u * freq;
    e(i) = std::sin(ang);
    e(half + i) = std::cos(ang);
  }
  return e;
}

}  // namespace pialab
