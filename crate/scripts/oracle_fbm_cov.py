"""MC oracle: increment covariance of the discrete divergence-free fBm synthesis.

Pipeline mirrored from the Rust implementation: white grid noise with std
2*pi*sigma per component (an orthonormal inverse FWT of a white pyramid is
distributionally the same), reduced-wavenumber Leray projection with the three
Nyquist corners annihilated, true-wavenumber fractional Laplacian power
-(H+1)/2 with DC pinned to zero. Compares E[(u(x+tau)-u(x)) outer] against
2*sigma^2*c_H*F_H(tau).
"""

import numpy as np
from math import gamma, pi

def c_h(H):
    return gamma(1 - H) / (pi * 2 ** (2 * H + 2) * gamma(H + 1) * H * (2 * H + 2))

def f_mat(H, x):
    r2 = x[0] ** 2 + x[1] ** 2
    r = np.sqrt(r2)
    outer = np.outer(x, x) / r2
    return r ** (2 * H) * ((2 * H + 1) * np.eye(2) - 2 * H * outer)

def synth(n, H, sigma, rng):
    m = np.fft.fftfreq(n, d=1.0 / n)  # integer frequencies
    m1, m2 = np.meshgrid(m, m)        # m1 varies along axis=1 (x1), m2 along axis=0
    mt1 = np.where(np.abs(m1) == n // 2, 0.0, m1)
    mt2 = np.where(np.abs(m2) == n // 2, 0.0, m2)
    k1, k2 = 2 * pi * mt1, 2 * pi * mt2
    kk = k1 ** 2 + k2 ** 2
    rho2 = (2 * pi) ** 2 * (m1 ** 2 + m2 ** 2)

    w = rng.standard_normal((2, n, n)) * (2 * pi * sigma)
    W = np.fft.fft2(w)
    dot = np.where(kk > 0, (W[0] * k1 + W[1] * k2) / np.where(kk > 0, kk, 1.0), 0.0)
    P1 = np.where(kk > 0, W[0] - dot * k1, 0.0)
    P2 = np.where(kk > 0, W[1] - dot * k2, 0.0)
    # DC: identity (restore), corners: already zeroed by kk==0 branch
    P1[0, 0] = W[0][0, 0]
    P2[0, 0] = W[1][0, 0]
    mult = np.where(rho2 > 0, rho2 ** (-(H + 1) / 2.0), 0.0)
    u1 = np.real(np.fft.ifft2(P1 * mult))
    u2 = np.real(np.fft.ifft2(P2 * mult))
    return u1, u2

def mc(n, H, sigma, taus, seeds):
    acc = {t: np.zeros((2, 2)) for t in taus}
    rng = np.random.default_rng(12345)
    for _ in range(seeds):
        u1, u2 = synth(n, H, sigma, rng)
        for t in taus:
            di, dj = t  # shift in grid indices: x1 += dj/n, x2 += di/n
            d1 = np.roll(u1, (-di, -dj), axis=(0, 1)) - u1
            d2 = np.roll(u2, (-di, -dj), axis=(0, 1)) - u2
            acc[t][0, 0] += np.mean(d1 * d1)
            acc[t][1, 1] += np.mean(d2 * d2)
            acc[t][0, 1] += np.mean(d1 * d2)
    for t in taus:
        acc[t] /= seeds
        acc[t][1, 0] = acc[t][0, 1]
    return acc

if __name__ == "__main__":
    for n, seeds in [(64, 40), (256, 20)]:
        for H in [1.0 / 3.0, 0.5, 2.0 / 3.0]:
            sigma = 1.0
            taus = [(0, 1), (1, 0), (1, 1), (0, 2)]
            got = mc(n, H, sigma, taus, seeds)
            print(f"n={n} H={H:.3f}")
            for t in taus:
                di, dj = t
                x = np.array([dj / n, di / n])  # (x1, x2) displacement
                th = 2 * sigma ** 2 * c_h(H) * f_mat(H, x)
                g = got[t]
                r11 = g[0, 0] / th[0, 0]
                r22 = g[1, 1] / th[1, 1]
                off = g[0, 1] - th[0, 1]
                scale = max(abs(th[0, 0]), abs(th[1, 1]))
                print(
                    f"  tau(di={di},dj={dj}): ratio11={r11:.4f} ratio22={r22:.4f} "
                    f"offdiag_err_rel={off / scale:+.4f}"
                )
