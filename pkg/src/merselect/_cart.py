"""Compiled kernels for weighted CART regression trees.

Trees are stored as flat arrays indexed by node id (ids assigned in creation
order, root = 0). A node with ``feature == -1`` is a leaf. Bootstrap resamples are expressed as integer sample
weights, which is equivalent to duplicating rows: duplicated rows share feature
values, so they never fall on different sides of a midpoint threshold.
"""
import numpy as np
from numba import njit

# A split must lower the node's weighted SSE by more than this fraction of it.
# The same margin decides ties, so equal-quality candidates keep the first one
# in (feature, threshold) order.
SPLIT_TOL = 1e-10

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True, nogil=True)
def _splitmix(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True, nogil=True)
def build_tree(X, y, w, presorted, max_depth, min_samples_split, max_features, seed):
    """Grow one tree.

    X : (n, d) float64, y : (n,) float64, w : (n,) float64 sample weights
    (rows with w == 0 are ignored), presorted : (n, d) int64 column argsort of X,
    max_depth < 0 means unlimited, max_features <= d features are examined per
    node (all of them, in index order, when max_features == d).
    """
    n, d = X.shape
    XT = np.ascontiguousarray(X.T)
    m = 0
    wsum = 0.0
    ysum = 0.0
    for i in range(n):
        if w[i] > 0:
            m += 1
            wsum += w[i]
            ysum += w[i] * y[i]
    ymean = ysum / wsum
    yc = y - ymean
    wy = w * yc

    order = np.empty((d, m), dtype=np.int64)
    for f in range(d):
        k = 0
        for t in range(n):
            r = presorted[t, f]
            if w[r] > 0:
                order[f, k] = r
                k += 1

    cap = 2 * m - 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    weight = np.zeros(cap)
    sse = np.zeros(cap)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    sp = 0
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = m
    st_depth[0] = 0
    sp = 1
    n_nodes = 1

    is_left = np.zeros(n, dtype=np.int64)
    buf = np.empty(m + 1, dtype=np.int64)
    feats = np.arange(d)
    cand = np.empty(d, dtype=np.int64)
    state = np.uint64(seed)

    while sp > 0:
        sp -= 1
        node = st_node[sp]
        s = st_start[sp]
        e = st_end[sp]
        depth = st_depth[sp]

        Wn = 0.0
        Yn = 0.0
        Sn = 0.0
        Qn = 0.0
        for t in range(s, e):
            r = order[0, t]
            Wn += w[r]
            Yn += w[r] * y[r]
            Sn += w[r] * yc[r]
            Qn += w[r] * yc[r] * yc[r]
        parent_sse = Qn - Sn * Sn / Wn
        if parent_sse < 0.0:
            parent_sse = 0.0
        sse[node] = parent_sse
        weight[node] = Wn

        lo = y[order[0, s]]
        hi = lo
        for t in range(s + 1, e):
            yt = y[order[0, t]]
            if yt < lo:
                lo = yt
            elif yt > hi:
                hi = yt
        pure = lo == hi
        # keep the leaf mean inside the node's target range despite rounding
        value[node] = min(max(Yn / Wn, lo), hi)
        if pure or Wn < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        n_cand = d
        if max_features < d:
            for j in range(d):
                feats[j] = j
            for j in range(max_features):
                state, z = _splitmix(state)
                span = np.uint64(d - j)
                # multiply-shift bounded draw on the high 32 bits
                pick = j + np.int64(((z >> np.uint64(32)) * span) >> np.uint64(32))
                tmp = feats[j]
                feats[j] = feats[pick]
                feats[pick] = tmp
            n_cand = max_features
            cand[:n_cand] = np.sort(feats[:n_cand])
        else:
            for j in range(d):
                cand[j] = j

        tol = SPLIT_TOL * parent_sse
        best_sse = parent_sse
        best_f = -1
        best_pos = -1
        best_thr = 0.0
        for c in range(n_cand):
            f = cand[c]
            of = order[f]
            xf = XT[f]
            WL = 0.0
            SL = 0.0
            r = of[s]
            xv = xf[r]
            for t in range(s, e - 1):
                WL += w[r]
                SL += wy[r]
                r = of[t + 1]
                xn = xf[r]
                if xn > xv:
                    WR = Wn - WL
                    SR = Sn - SL
                    # child SSE = Qn - (SL^2/WL + SR^2/WR); compare without dividing
                    num = SL * SL * WR + SR * SR * WL
                    den = WL * WR
                    if num > (Qn - best_sse + tol) * den:
                        best_sse = Qn - num / den
                        best_f = f
                        best_pos = t
                        thr = 0.5 * (xv + xn)
                        if thr >= xn:
                            thr = xv
                        best_thr = thr
                xv = xn
        if best_f < 0:
            continue

        for t in range(s, e):
            is_left[order[best_f, t]] = 1 if t <= best_pos else 0
        nl = best_pos - s + 1
        for f in range(d):
            if f == best_f:
                continue
            of = order[f]
            a = 0
            b = nl
            # branchless stable partition; the stray write lands in buf[m]
            for t in range(s, e):
                r = of[t]
                go = is_left[r]
                buf[a if go else m] = r
                buf[m if go else b] = r
                a += go
                b += 1 - go
            for t in range(e - s):
                of[s + t] = buf[t]

        lc = n_nodes
        rc = n_nodes + 1
        n_nodes += 2
        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = lc
        right[node] = rc
        # right pushed first so the left subtree is grown (and numbered) first
        st_node[sp] = rc
        st_start[sp] = s + nl
        st_end[sp] = e
        st_depth[sp] = depth + 1
        sp += 1
        st_node[sp] = lc
        st_start[sp] = s
        st_end[sp] = s + nl
        st_depth[sp] = depth + 1
        sp += 1

    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), weight[:n_nodes].copy(), sse[:n_nodes].copy())


@njit(cache=True, nogil=True)
def predict_tree_rows(feature, threshold, left, right, value, X):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out
