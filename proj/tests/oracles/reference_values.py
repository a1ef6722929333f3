"""Independent reference values for the unit tests.

Computed with dense scipy/mpmath linear algebra (full 2^n generator matrices,
matrix exponentials and adaptive quadrature); the C++ code never forms these
objects. Run: python3 tests/oracles/reference_values.py
"""
import itertools

import mpmath as mp
import numpy as np
from scipy.integrate import quad, quad_vec
from scipy.linalg import expm

mp.mp.dps = 40

XI3 = np.array([[0.0, 0.3, 0.2], [0.1, 0.0, 0.5], [0.4, 0.2, 0.0]])


def h(x):
    return x - mp.log(1 + x)


def two_site_entropy(a, T):
    l1 = (mp.e ** (2 * a * T) - 1) / (2 * a * T) - 1
    l2 = (1 - mp.e ** (-2 * a * T)) / (2 * a * T) - 1
    return (h(l1) + h(l2)) / 2


def sigma_quad(xi, T):
    f = lambda s: expm(s * xi) @ expm(s * xi).T
    val, _ = quad_vec(f, 0, T, epsabs=1e-15, epsrel=1e-14)
    return val


def generator(xi, kappa):
    n = xi.shape[0]
    S = 1 << n
    A = np.zeros((S, S))
    for m in range(S):
        for j in range(n):
            if m >> j & 1:
                continue
            r = kappa * sum(xi[i, j] for i in range(n) if m >> i & 1)
            A[m, m | 1 << j] += r
            A[m, m] -= r
    return A


def table(n, f):
    return np.array([f([i for i in range(n) if m >> i & 1]) for m in range(1 << n)])


def main():
    print("two-site entropy a=0.5 T=0.5:", mp.nstr(two_site_entropy(0.5, 0.5), 17))
    print("kl 1d (1 -> 2):", mp.nstr((2 - 1 - mp.log(2)) / 2, 17))

    S = sigma_quad(XI3, 0.7)
    print("Sigma_T XI3 T=0.7:")
    for row in S:
        print("  ", ", ".join(f"{x:.17g}" for x in row))
    sub = S[np.ix_([0, 2], [0, 2])] / 0.7 - np.eye(2)
    lam = np.linalg.eigvalsh(sub)
    print("entropy v={0,2}:", repr(0.5 * sum(float(h(mp.mpf(x))) for x in lam)))

    # D_T = sum_i (phi1(T xi) - I - T xi / 2)_ii^2 with phi1(A) = sum A^m/(m+1)!
    T = 0.9
    n = 3
    aug = np.zeros((2 * n, 2 * n))
    aug[:n, :n] = T * XI3
    aug[:n, n:] = np.eye(n)
    phi1 = expm(aug)[:n, n:]
    d = np.diag(phi1 - np.eye(n) - T * XI3 / 2)
    print("D_T XI3 T=0.9:", repr(float(np.sum(d ** 2))))

    kappa = 1.3
    A = generator(XI3, kappa)
    F = table(3, lambda v: len(v) ** 2)
    print("E_{0}|X_0.8|^2 kappa=1.3:", repr((expm(0.8 * A) @ F)[1]))

    # int_0^T E_v[C(X_t)] dt with M = 0.7, sigma = 1.2, v = {1}, T = 1.1, plus discounted r = 0.4
    M, sig = 0.7, 1.2
    C = table(3, lambda v: M / sig ** 2 * sum(sum(XI3[i, j] for j in v) ** 2 for i in v))
    val, _ = quad(lambda t: (expm(t * A) @ C)[2], 0, 1.1, epsabs=1e-15, epsrel=1e-14)
    print("int C v={1} T=1.1:", repr(val))
    val, _ = quad(lambda t: np.exp(-0.4 * t) * (expm(t * A) @ C)[2], 0, 1.1, epsabs=1e-15, epsrel=1e-14)
    print("int e^{-0.4t} C v={1} T=1.1:", repr(val))

    # family iiia / iiib right-hand sides, G = xi entrywise squared, v = {0,1}, t = 0.6
    G = XI3 ** 2
    t = 0.6
    one = np.array([1.0, 1.0, 0.0])
    E = lambda s: expm(kappa * s * XI3)
    Gs = lambda s: E(s) @ G @ E(s).T
    integrand = lambda s: one @ XI3 @ E(t - s) @ np.diag(Gs(s))
    I, _ = quad(integrand, 0, t, epsabs=1e-15, epsrel=1e-14)
    print("iiia v={0,1} t=0.6:", repr(one @ Gs(t) @ one + kappa * I))
    k = 2
    Gt = Gs(t)
    first = k * np.exp(kappa * t) * (one @ (XI3 @ Gt + Gt @ XI3.T + Gt) @ one)
    Id = np.eye(3)
    integrand = lambda s: one @ E(t - s) @ (Id + XI3) @ XI3 @ np.diag(XI3 @ Gs(s) + Gs(s) @ XI3.T + 2 * Gs(s))
    I, _ = quad(integrand, 0, t, epsabs=1e-15, epsrel=1e-14)
    print("iiib v={0,1} t=0.6:", repr(first + kappa * k * np.exp(kappa * t) * I))

    x = np.array([0.5, 1.0, 2.0])
    print("iic v={0,1} t=0.6:",
          repr(2 * k ** 2 * one @ expm(kappa * t * (2 * Id + XI3)) @ (Id + XI3) @ (Id + XI3) @ x))

    # average entropy over k = 2 subsets, enumeration
    S9 = sigma_quad(XI3, 0.7)
    vals = []
    for v in itertools.combinations(range(3), 2):
        sub = S9[np.ix_(v, v)] / 0.7 - np.eye(2)
        vals.append(0.5 * sum(float(h(mp.mpf(x))) for x in np.linalg.eigvalsh(sub)))
    print("avg entropy k=2:", repr(sum(vals) / len(vals)))


if __name__ == "__main__":
    main()
