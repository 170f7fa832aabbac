"""Compiled SMO loop for the epsilon-SVR dual.

The dual is written over 2N variables a = [alpha; alpha*] with labels
s = [+1...; -1...]::

    min  1/2 a^T Q a + p^T a   s.t.  s^T a = 0,  0 <= a <= C
    Q_ij = s_i s_j K(i mod N, j mod N),   p = [eps - y; eps + y]

Each iteration picks the maximal violating pair (first index wins ties) and
solves the two-variable subproblem in closed form.
"""
import numpy as np
from numba import njit

TAU = 1e-12


@njit(cache=True, nogil=True)
def violation(a, G, s, C):
    """Return (m - M, i, j): the maximal KKT gap and its violating pair."""
    n2 = a.shape[0]
    gmax = -np.inf
    gmin = np.inf
    i = -1
    j = -1
    for t in range(n2):
        v = -s[t] * G[t]
        up = (s[t] > 0 and a[t] < C) or (s[t] < 0 and a[t] > 0)
        low = (s[t] > 0 and a[t] > 0) or (s[t] < 0 and a[t] < C)
        if up and v > gmax:
            gmax = v
            i = t
        if low and v < gmin:
            gmin = v
            j = t
    return gmax - gmin, i, j


@njit(cache=True, nogil=True)
def solve(K, y, C, eps, tol, max_iter):
    n = K.shape[0]
    n2 = 2 * n
    a = np.zeros(n2)
    s = np.empty(n2)
    G = np.empty(n2)
    for t in range(n):
        s[t] = 1.0
        s[t + n] = -1.0
        G[t] = eps - y[t]
        G[t + n] = eps + y[t]

    it = 0
    gap = 0.0
    while True:
        gap, i, j = violation(a, G, s, C)
        if i < 0 or j < 0 or gap < tol or it >= max_iter:
            break
        it += 1
        ki = i % n
        kj = j % n
        Qii = K[ki, ki]
        Qjj = K[kj, kj]
        Qij = s[i] * s[j] * K[ki, kj]
        ai_old = a[i]
        aj_old = a[j]
        if s[i] != s[j]:
            quad = Qii + Qjj + 2.0 * Qij
            if quad <= 0.0:
                quad = TAU
            delta = (-G[i] - G[j]) / quad
            diff = a[i] - a[j]
            a[i] += delta
            a[j] += delta
            if diff > 0.0:
                if a[j] < 0.0:
                    a[j] = 0.0
                    a[i] = diff
            else:
                if a[i] < 0.0:
                    a[i] = 0.0
                    a[j] = -diff
            if diff > 0.0:
                if a[i] > C:
                    a[i] = C
                    a[j] = C - diff
            else:
                if a[j] > C:
                    a[j] = C
                    a[i] = C + diff
        else:
            quad = Qii + Qjj - 2.0 * Qij
            if quad <= 0.0:
                quad = TAU
            delta = (G[i] - G[j]) / quad
            total = a[i] + a[j]
            a[i] -= delta
            a[j] += delta
            if total > C:
                if a[i] > C:
                    a[i] = C
                    a[j] = total - C
            else:
                if a[j] < 0.0:
                    a[j] = 0.0
                    a[i] = total
            if total > C:
                if a[j] > C:
                    a[j] = C
                    a[i] = total - C
            else:
                if a[i] < 0.0:
                    a[i] = 0.0
                    a[j] = total
        dai = a[i] - ai_old
        daj = a[j] - aj_old
        for t in range(n2):
            kt = t % n
            G[t] += s[t] * (s[i] * K[kt, ki] * dai + s[j] * K[kt, kj] * daj)
    return a, G, it, gap


@njit(cache=True, nogil=True)
def offset(a, G, s, C):
    """LIBSVM-style rho: mean of s*G over free variables, else midpoint of bounds."""
    ub = np.inf
    lb = -np.inf
    total = 0.0
    n_free = 0
    for t in range(a.shape[0]):
        yG = s[t] * G[t]
        if a[t] >= C:
            if s[t] < 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        elif a[t] <= 0.0:
            if s[t] > 0:
                ub = min(ub, yG)
            else:
                lb = max(lb, yG)
        else:
            n_free += 1
            total += yG
    if n_free > 0:
        return total / n_free
    return 0.5 * (ub + lb)
