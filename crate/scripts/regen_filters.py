#!/usr/bin/env python3
"""Regenerate the orthonormal filter-bank constants embedded in crates/core.

Daubechies filters are derived from scratch by spectral factorization of the
binomial half-band polynomial (extremal-phase root selection, 60-digit
arithmetic). Coiflet filters are refined by Gauss-Newton on their defining
equations (orthonormality, DC gain sqrt(2), wavelet moments, scaling moments
about a free center), seeded with the standard published double-precision
tables. Output is printed as Rust `const` arrays; residuals are printed so a
bad table cannot slip through silently.

Run: python3 scripts/regen_filters.py
"""

import mpmath as mp

mp.mp.dps = 60


def binom(n, k):
    return mp.binomial(n, k)


def poly_mul(a, b):
    out = [mp.mpf(0)] * (len(a) + len(b) - 1)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            out[i + j] += ai * bj
    return out


def daubechies(m):
    """Extremal-phase Daubechies scaling filter with m vanishing moments."""
    # P(y) = sum_k C(m-1+k, k) y^k, the Daubechies half-band remainder.
    p = [binom(m - 1 + k, k) for k in range(m)]
    # Roots of P in y, then map y -> z via y = (2 - z - 1/z)/4 and keep |z| < 1.
    roots_y = mp.polyroots(list(reversed([mp.mpc(c) for c in p])), maxsteps=200, extraprec=200)
    kept = []
    for y in roots_y:
        # z^2 - (2 - 4y) z + 1 = 0
        b = 2 - 4 * y
        disc = mp.sqrt(b * b - 4)
        for z in ((b + disc) / 2, (b - disc) / 2):
            if abs(z) < 1:
                kept.append(z)
                break
    h = [mp.mpc(1)]
    for _ in range(m):
        h = poly_mul(h, [mp.mpc(1), mp.mpc(1)])  # (1 + z)^m
    for z in kept:
        h = poly_mul(h, [-z, mp.mpc(1)])
    h = [c.real for c in h]
    s = sum(h)
    h = [c * mp.sqrt(2) / s for c in h]
    # Orientation convention: energy front-loaded (extremal phase), h[0] > 0.
    if abs(h[0]) < abs(h[-1]):
        h = h[::-1]
    if h[0] < 0:
        h = [-c for c in h]
    return h


# Published double-precision Coiflet tables (seed values for refinement).
# 12 taps / 4 wavelet moments, and 30 taps / 10 wavelet moments.
COIF4_SEED = [
    0.016387336463522112, -0.04146493678175915, -0.06737255472196302,
    0.3861100668211622, 0.8127236354455423, 0.41700518442169254,
    -0.0764885990783064, -0.0594344186464569, 0.023680171946334084,
    0.0056114348193944995, -0.0018232088707029932, -0.0007205494453645122,
]
COIF10_SEED = [
    -9.517657273819165e-08, -1.6744288576823017e-07, 2.0637618513646814e-06,
    3.7346551751414047e-06, -2.1315026809955787e-05, -4.134043227251251e-05,
    0.00014054114970203437, 0.00030225958181306315, -0.0006381313430451114,
    -0.0016628637020130838, 0.0024333732126576722, 0.006764185448053083,
    -0.009164231162481846, -0.01976177894257264, 0.03268357426711183,
    0.0412892087501817, -0.10557420870333893, -0.06203596396290357,
    0.4379916261718371, 0.7742896036529562, 0.4215662066908515,
    -0.05204316317624377, -0.09192001055969624, 0.02816802897093635,
    0.023408156785839195, -0.010131117519849788, -0.004159358781386048,
    0.0021782363581090178, 0.00035858968789573785, -0.00021208083980379827,
]


def coiflet_residuals(h, tau, n_psi, n_phi):
    L = len(h)
    g = [(-1) ** k * h[L - 1 - k] for k in range(L)]
    res = []
    # Orthonormality of even shifts.
    for j in range(L // 2):
        res.append(sum(h[k] * h[k + 2 * j] for k in range(L - 2 * j)) - (1 if j == 0 else 0))
    res.append(sum(h) - mp.sqrt(2))
    # Moment rows are scaled by L^-p so the stacked system is equilibrated.
    for p in range(1, n_psi):
        res.append(sum(g[k] * mp.mpf(k) ** p for k in range(L)) / mp.mpf(L) ** p)
    for p in range(1, n_phi + 1):
        res.append(sum(h[k] * (k - tau) ** p for k in range(L)) / mp.mpf(L) ** p)
    return res


def refine_coiflet(seed, n_psi, n_phi):
    """Gauss-Newton refinement of a coiflet table to working precision."""
    h = [mp.mpf(x) for x in seed]
    tau = sum(k * h[k] for k in range(len(h))) / sum(h)
    for _ in range(60):
        x = h + [tau]
        res = coiflet_residuals(h, tau, n_psi, n_phi)
        m, n = len(res), len(x)
        jac = mp.matrix(m, n)
        eps = mp.mpf(10) ** (-25)
        for j in range(n):
            xp = list(x)
            xp[j] += eps
            rp = coiflet_residuals(xp[:-1], xp[-1], n_psi, n_phi)
            for i in range(m):
                jac[i, j] = (rp[i] - res[i]) / eps
        r = mp.matrix(res)
        jt = jac.T
        jtj = jt * jac
        mu = mp.mpf(10) ** (-30) * max(abs(jtj[i, i]) for i in range(n))
        for i in range(n):
            jtj[i, i] += mu
        step = mp.lu_solve(jtj, jt * r)
        for j in range(len(h)):
            h[j] -= step[j]
        tau -= step[len(h)]
        if mp.norm(step) < mp.mpf(10) ** (-40):
            break
    # Final polish: project onto the orthonormality/DC/wavelet-moment manifold
    # (minimal-norm correction; the scaling-moment property is kept implicitly).
    for _ in range(30):
        res = coiflet_residuals(h, tau, n_psi, 0)
        m, n = len(res), len(h)
        jac = mp.matrix(m, n)
        eps = mp.mpf(10) ** (-25)
        for j in range(n):
            hp = list(h)
            hp[j] += eps
            rp = coiflet_residuals(hp, tau, n_psi, 0)
            for i in range(m):
                jac[i, j] = (rp[i] - res[i]) / eps
        r = mp.matrix(res)
        jjt = jac * jac.T
        mu = mp.mpf(10) ** (-30) * max(abs(jjt[i, i]) for i in range(m))
        for i in range(m):
            jjt[i, i] += mu
        y = mp.lu_solve(jjt, r)
        step = jac.T * y
        for j in range(n):
            h[j] -= step[j]
        if mp.norm(step) < mp.mpf(10) ** (-45):
            break
    return h, tau


def report(name, h):
    L = len(h)
    orth = max(abs(sum(h[k] * h[k + 2 * j] for k in range(L - 2 * j)) - (1 if j == 0 else 0))
               for j in range(L // 2))
    dc = abs(sum(h) - mp.sqrt(2))
    g = [(-1) ** k * h[L - 1 - k] for k in range(L)]
    mom = [abs(sum(g[k] * mp.mpf(k) ** p for k in range(L))) for p in range(0, 11)]
    worst = max(mom[: {12: 4, 30: 10, 8: 4, 16: 8, 2: 1}[L]])
    print(f"// {name}: orth={mp.nstr(orth, 3)} dc={mp.nstr(dc, 3)} psi-moments<={mp.nstr(worst, 3)}")
    print(f"pub const {name}: [f64; {L}] = [")
    for k in range(0, L, 3):
        row = ", ".join(mp.nstr(c, 17, strip_zeros=False) for c in h[k:k + 3])
        print(f"    {row},")
    print("];\n")


if __name__ == "__main__":
    report("HAAR", [1 / mp.sqrt(2), 1 / mp.sqrt(2)])
    report("DB4", daubechies(4))
    report("DB8", daubechies(8))
    h, tau = refine_coiflet(COIF4_SEED, 4, 3)
    print(f"// coif4 moment center tau = {mp.nstr(tau, 8)}")
    report("COIF4", h)
    h, tau = refine_coiflet(COIF10_SEED, 10, 9)
    print(f"// coif10 moment center tau = {mp.nstr(tau, 8)}")
    report("COIF10", h)
