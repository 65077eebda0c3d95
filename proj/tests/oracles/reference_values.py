"""Closed-form reference values frozen in the C++ tests.

Run with `python3 reference_values.py`; needs mpmath.
"""
import mpmath as mp

mp.mp.dps = 40

# Scalar reference system a=0.9, b=1, q=r=1, C=1.
a, b, q, r, c = mp.mpf("0.9"), 1, 1, 1, 1
# Scalar DARE: b^2 K^2 + (r - a^2 r - q b^2) K - q r = 0, positive root.
A2 = b * b
A1 = r - a * a * r - q * b * b
A0 = -q * r
K = (-A1 + mp.sqrt(A1 * A1 - 4 * A2 * A0)) / (2 * A2)
L = -a * b * K / (b * b * K + r)
D = a + b * L
print("K", mp.nstr(K, 16))
print("L", mp.nstr(L, 16))
print("D", mp.nstr(D, 16))
print("J*", mp.nstr(K * c, 16))
S = c / (1 - D * D)
print("sum D^i C D^i", mp.nstr(S, 16))
# sigma^2 = 4 tr(KCK D S D') + Var[w'Kw], Gaussian w: Var = 2 K^2 C^2.
sigma2 = 4 * K * c * K * D * S * D + 2 * K * K * c * c
print("sigma2", mp.nstr(sigma2, 16))

# Gaussian tail triple (2, 2 C_ii, 2) with C = 1/2, n = 50, p = 1, delta = 0.5:
# b_n = sqrt(2 C log(2 n p / delta)) = sqrt(log 200).
print("sqrt(log 200)", mp.nstr(mp.sqrt(mp.log(200)), 16))

# Weibull shape 0.5: unit-variance scale s = 1 / sqrt(Gamma(1 + 2/a)), kurtosis, b2 = s^a.
sh = mp.mpf("0.5")
s = 1 / mp.sqrt(mp.gamma(1 + 2 / sh))
print("weibull kurtosis", mp.nstr(mp.gamma(1 + 4 / sh) / mp.gamma(1 + 2 / sh) ** 2, 16))
print("weibull b2", mp.nstr(s ** sh, 16))

# t1-verifiable: a=0, b=1, L=0, uniform noise C=1, eps=0.5, delta=0.1, x0=0.
sup = mp.sqrt(3)
zeta = 1
beta = zeta * (0 + sup)
eps, delta, p = mp.mpf("0.5"), mp.mpf("0.1"), 1
log4 = mp.log(4 * p / delta)
rhs = [(18 * 1 + 2 * eps) / eps ** 2 * p * log4, 0, 6 / eps * (0 + 1)]
den = [sup ** 2, beta ** 2 * sup ** 2, beta ** 2]
N = max(int(mp.ceil(rhs[k] * den[k])) for k in range(3))
print("t1 N", N)
n = N + 1
radius = 16 * n * p / ((n - 1) * 1) * beta ** 2 * sup ** 2 * mp.log(2 * p / delta)
print("t1 prediction n", n, "radius", mp.nstr(radius, 16))

# Jordan block term: inf over rho >= |l| of t^{m-1} rho^t sum_{j<m} rho^{-j}/j!,
# minimized numerically on the real line.
def block(mod, m, t):
    f = lambda rho: t ** (m - 1) * rho ** t * sum(rho ** (-j) / mp.factorial(j) for j in range(m))
    lo, hi = mod, mod * 1000
    for _ in range(200):
        a1, a2 = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if f(a1) <= f(a2):
            hi = a2
        else:
            lo = a1
    return f(lo)
print("block(0.5, 2, 3)", mp.nstr(block(mp.mpf("0.5"), 2, 3), 16))
print("block(0.5, 2, 1)", mp.nstr(block(mp.mpf("0.5"), 2, 1), 16))
print("block(0.5, 3, 1)", mp.nstr(block(mp.mpf("0.5"), 3, 1), 16))
print("block(0.9, 3, 4)", mp.nstr(block(mp.mpf("0.9"), 3, 4), 16))
