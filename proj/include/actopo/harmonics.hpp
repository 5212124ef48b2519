#pragma once

// Real orthonormal spherical harmonics on S^2.
//   Y_l0 = Pbar_l^0 / sqrt(2 pi), Y_lm = Pbar_l^m cos(m phi) / sqrt(pi),
//   Y_l,-m = Pbar_l^m sin(m phi) / sqrt(pi),
// with Pbar normalized so that int_0^pi Pbar^2 sin = 1 and no Condon-Shortley
// phase. Flat index of (l, m) is l*l + l + m.

#include <vector>

namespace actopo::harmonics {

inline int sh_index(int l, int m) { return l * l + l + m; }
inline int sh_count(int lmax) { return (lmax + 1) * (lmax + 1); }

struct ShValues {
    std::vector<double> y;          // Y_lm
    std::vector<double> d_theta;    // dY/dtheta
    std::vector<double> d_phi_sin;  // (1/sin theta) dY/dphi, finite on the axis
};

/// Fill all Y_lm (and optionally their angular derivatives) up to lmax at
/// polar angle theta in [0, pi] and azimuth phi.
void real_spherical_harmonics(int lmax, double theta, double phi, ShValues& out,
                              bool derivatives);

}  // namespace actopo::harmonics
