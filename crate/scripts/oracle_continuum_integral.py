"""Verify the closed-form increment covariance against the continuum integral.

E11(delta) = sigma^2 int_{R^2} sin^2(theta) (2 pi r)^(-2H-2) 4 sin^2(pi r delta cos theta) r dr dtheta / ???
Convention under test: spectral density per component j:
  S_j(k) = sigma^2 (1 - k_j^2/|k|^2) |k|^(-2H-2),  k = 2 pi m,  measure dm (unit lattice density).
Increment variance: E11 = int dm (1 - cos^2 th) sigma^2 (2pi|m|)^(-2H-2) 4 sin^2(pi m . delta e1).
Closed form: 2 sigma^2 c_H t^{2H} (longitudinal), * (2H+1) transverse.
"""

import numpy as np
from math import gamma, pi
from scipy import integrate

def c_h(H):
    return gamma(1 - H) / (pi * 2 ** (2 * H + 2) * gamma(H + 1) * H * (2 * H + 2))

def entry(H, t, which):
    # polar in m-plane: m = (r cos th, r sin th)
    def fr(r):
        def fth(th):
            ang = np.sin(th) ** 2 if which == 11 else np.cos(th) ** 2
            return ang * 4 * np.sin(pi * r * np.cos(th) * t) ** 2
        v, _ = integrate.quad(fth, 0, 2 * pi, limit=200)
        return v * (2 * pi * r) ** (-2 * H - 2) * r
    v, _ = integrate.quad(fr, 0, np.inf, limit=400)
    return v

if __name__ == "__main__":
    for H in [1.0 / 3.0, 0.5, 2.0 / 3.0]:
        t = 1.0 / 64.0
        th11 = 2 * c_h(H) * t ** (2 * H)
        th22 = th11 * (2 * H + 1)
        i11 = entry(H, t, 11)
        i22 = entry(H, t, 22)
        print(f"H={H:.3f}  int11/closed11={i11 / th11:.6f}  int22/closed22={i22 / th22:.6f}")
