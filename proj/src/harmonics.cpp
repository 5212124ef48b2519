#include "actopo/harmonics.hpp"

#include <cmath>
#include <numbers>

#include "actopo/error.hpp"

namespace actopo::harmonics {

void real_spherical_harmonics(int lmax, double theta, double phi, ShValues& out,
                              bool derivatives) {
    if (lmax < 0) throw ValidationError("real_spherical_harmonics: lmax must be >= 0");
    const int n = sh_count(lmax);
    out.y.assign(n, 0.0);
    if (derivatives) {
        out.d_theta.assign(n, 0.0);
        out.d_phi_sin.assign(n, 0.0);
    }
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double inv_sqrt_pi = 1.0 / std::sqrt(std::numbers::pi);
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

    // pbar[l] = Pbar_l^m, qbar[l] = Pbar_l^m / sin(theta) for the current m.
    std::vector<double> pbar(lmax + 2, 0.0), qbar(lmax + 2, 0.0), p1(lmax + 1, 0.0);
    double pmm = 1.0 / std::sqrt(2.0);  // Pbar_0^0
    double qmm = 0.0;                    // Pbar_m^m / sin, m >= 1
    for (int m = 0; m <= lmax; ++m) {
        if (m > 0) {
            const double f = std::sqrt((2.0 * m + 1.0) / (2.0 * m));
            qmm = f * pmm;  // uses Pbar_{m-1}^{m-1}
            pmm = qmm * st;
        }
        // Upward in l for fixed m: both P and Q obey the same linear recurrence.
        for (int l = m; l <= lmax; ++l) {
            if (l == m) {
                pbar[l] = pmm;
                qbar[l] = qmm;
            } else {
                const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
                const double b =
                    l - 2 >= m ? std::sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0))
                               : 0.0;
                const double p2 = l - 2 >= m ? pbar[l - 2] : 0.0;
                const double q2 = l - 2 >= m ? qbar[l - 2] : 0.0;
                pbar[l] = a * (ct * pbar[l - 1] - b * p2);
                qbar[l] = a * (ct * qbar[l - 1] - b * q2);
            }
        }
        if (m == 1) {
            for (int l = 1; l <= lmax; ++l) p1[l] = pbar[l];
        }
        const double cm = std::cos(m * phi);
        const double sm = std::sin(m * phi);
        for (int l = m; l <= lmax; ++l) {
            if (m == 0) {
                out.y[sh_index(l, 0)] = pbar[l] * inv_sqrt_2pi;
            } else {
                out.y[sh_index(l, m)] = pbar[l] * cm * inv_sqrt_pi;
                out.y[sh_index(l, -m)] = pbar[l] * sm * inv_sqrt_pi;
            }
            if (!derivatives || m == 0) continue;
            // dPbar_l^m/dtheta = l cos Q_l^m - sqrt((l^2-m^2)(2l+1)/(2l-1)) Q_{l-1}^m
            const double c = l > m ? std::sqrt((static_cast<double>(l) * l - m * m) *
                                               (2.0 * l + 1.0) / (2.0 * l - 1.0))
                                   : 0.0;
            const double dp = l * ct * qbar[l] - (l > m ? c * qbar[l - 1] : 0.0);
            out.d_theta[sh_index(l, m)] = dp * cm * inv_sqrt_pi;
            out.d_theta[sh_index(l, -m)] = dp * sm * inv_sqrt_pi;
            out.d_phi_sin[sh_index(l, m)] = -m * qbar[l] * sm * inv_sqrt_pi;
            out.d_phi_sin[sh_index(l, -m)] = m * qbar[l] * cm * inv_sqrt_pi;
        }
    }
    if (derivatives) {
        // m = 0: dPbar_l^0/dtheta = -sqrt(l(l+1)) Pbar_l^1.
        for (int l = 1; l <= lmax; ++l) {
            out.d_theta[sh_index(l, 0)] = -std::sqrt(l * (l + 1.0)) * p1[l] * inv_sqrt_2pi;
        }
    }
}

}  // namespace actopo::harmonics
