"""Deterministic lattice-sum check of the discrete increment covariance.

With eps std = n*sigma the expected squared increment of the synthesized field
is E[(du_j)^2] = sigma^2 * sum_m (1 - kt_j^2/|kt|^2) (2pi|m|)^(-2H-2) * 4 sin^2(pi m.delta)
(unit lattice in m, reduced Leray direction, true-|k| fractional power).
Compare against the closed form 2 sigma^2 c_H F_H(tau) entrywise to isolate the
Nyquist-truncation deficit T(tau) with no Monte-Carlo noise.
"""

import numpy as np
from math import gamma, pi

def c_h(H):
    return gamma(1 - H) / (pi * 2 ** (2 * H + 2) * gamma(H + 1) * H * (2 * H + 2))

def lattice_entries(n, H, t_px):
    m = np.fft.fftfreq(n, d=1.0 / n)
    m1, m2 = np.meshgrid(m, m)
    mt1 = np.where(np.abs(m1) == n // 2, 0.0, m1)
    mt2 = np.where(np.abs(m2) == n // 2, 0.0, m2)
    kk = mt1 ** 2 + mt2 ** 2
    rho2 = m1 ** 2 + m2 ** 2
    # Leray diagonal entries (1 - kt_j^2/|kt|^2); corners/DC carry no energy.
    with np.errstate(invalid="ignore", divide="ignore"):
        p11 = np.where(kk > 0, 1.0 - mt1 ** 2 / kk, 0.0)
        p22 = np.where(kk > 0, 1.0 - mt2 ** 2 / kk, 0.0)
        amp = np.where(rho2 > 0, (2 * pi) ** (-2 * H - 2) * rho2 ** (-H - 1), 0.0)
    # increment along x1 by t_px pixels: delta = (t_px/n, 0)
    w = 4 * np.sin(pi * m1 * t_px / n) ** 2
    e11 = np.sum(p11 * amp * w)
    e22 = np.sum(p22 * amp * w)
    return e11, e22

if __name__ == "__main__":
    n = 256
    for H in [1.0 / 3.0, 0.5, 2.0 / 3.0]:
        ch = c_h(H)
        for t_px in [1, 2, 4, 8, 16]:
            t = t_px / n
            th11 = 2 * ch * t ** (2 * H) * 1.0           # longitudinal
            th22 = 2 * ch * t ** (2 * H) * (2 * H + 1.0)  # transverse
            e11, e22 = lattice_entries(n, H, t_px)
            print(
                f"H={H:.3f} t={t_px:2d}px  T11={e11 / th11:.4f}  T22={e22 / th22:.4f}"
            )
        print()
