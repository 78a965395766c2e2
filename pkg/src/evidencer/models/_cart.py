"""Compiled CART kernels.

A single weighted squared-error splitter serves every ensemble.  For 0/1
targets the weighted Gini impurity of a node is exactly twice its weighted
variance, so the classification trees use the same sweep and report their
decrease scaled by two.

The design matrix arrives in compressed-column form.  Text features are
mostly zero, so a node only visits the non-zero entries of a column and
treats its zeros as one aggregated block in the sorted sweep.
"""
from __future__ import annotations

import numpy as np
from numba import njit

LEAF = -1


def to_csc(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(indptr, row indices, values) of a dense matrix, rows ascending per column."""
    cols, rows = np.nonzero(X.T)
    data = X[rows, cols].astype(np.float64)
    indptr = np.zeros(X.shape[1] + 1, dtype=np.int64)
    np.cumsum(np.bincount(cols, minlength=X.shape[1]), out=indptr[1:])
    return indptr, rows.astype(np.int64), data


@njit(cache=True, nogil=True)
def _sse(sw, swy, swyy):
    if sw <= 0.0:
        return 0.0
    v = swyy - swy * swy / sw
    return v if v > 0.0 else 0.0


@njit(cache=True, nogil=True)
def _argsort_small(vals, n, out):
    """Stable insertion argsort of vals[:n] into out[:n]; columns are short."""
    for i in range(n):
        out[i] = i
    for i in range(1, n):
        j = i
        cur = out[i]
        v = vals[cur]
        while j > 0 and vals[out[j - 1]] > v:
            out[j] = out[j - 1]
            j -= 1
        out[j] = cur


@njit(cache=True, nogil=True)
def build_tree(indptr, rows, data, n_samples, y, w, h, max_depth, min_leaf_weight, max_features, seed, crit_scale):
    """Grow one tree depth-first.

    Samples with w <= 0 are ignored.  Leaf values are sum(w*y) / sum(w*h);
    h == 1 gives the weighted mean.  Returns (feature, threshold, left,
    right, value, decrease, node_weight) trimmed to the number of nodes.
    """
    np.random.seed(seed)
    n_features = indptr.shape[0] - 1

    m = 0
    for i in range(n_samples):
        if w[i] > 0.0:
            m += 1
    idx = np.empty(m, dtype=np.int64)
    where = np.full(n_samples, -1, dtype=np.int64)
    k = 0
    for i in range(n_samples):
        if w[i] > 0.0:
            idx[k] = i
            where[i] = k
            k += 1

    cap = 2 * max(m, 1) + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, LEAF, dtype=np.int64)
    right = np.full(cap, LEAF, dtype=np.int64)
    value = np.zeros(cap)
    decrease = np.zeros(cap)
    node_w = np.zeros(cap)

    # features[:n_known] are the features known to be constant in the
    # current node; the prefix only grows along a root-to-leaf path
    features = np.arange(n_features)
    constant = np.empty(n_features, dtype=np.int64)

    st_node = np.empty(cap, dtype=np.int64)
    st_start = np.empty(cap, dtype=np.int64)
    st_end = np.empty(cap, dtype=np.int64)
    st_depth = np.empty(cap, dtype=np.int64)
    st_nconst = np.empty(cap, dtype=np.int64)
    st_node[0] = 0
    st_start[0] = 0
    st_end[0] = m
    st_depth[0] = 0
    st_nconst[0] = 0
    top = 1
    n_nodes = 1

    nz_val = np.empty(m + 1)
    nz_row = np.empty(m + 1, dtype=np.int64)
    sv = np.empty(m + 1)
    sw_ = np.empty(m + 1)
    swy_ = np.empty(m + 1)
    scratch = np.zeros(n_samples)
    order = np.empty(m + 1, dtype=np.int64)

    while top > 0:
        top -= 1
        node = st_node[top]
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        n_known = st_nconst[top]

        sw = 0.0
        swy = 0.0
        swyy = 0.0
        swh = 0.0
        ymin = np.inf
        ymax = -np.inf
        for t in range(start, end):
            i = idx[t]
            sw += w[i]
            swy += w[i] * y[i]
            swyy += w[i] * y[i] * y[i]
            swh += w[i] * h[i]
            if y[i] < ymin:
                ymin = y[i]
            if y[i] > ymax:
                ymax = y[i]
        node_w[node] = sw
        value[node] = swy / swh if swh > 1e-300 else 0.0

        nm = end - start
        if nm < 2 or ymin == ymax or (max_depth >= 0 and depth >= max_depth):
            continue
        if min_leaf_weight > 0.0 and sw < 2.0 * min_leaf_weight:
            continue

        parent = swy * swy / sw
        tol = 1e-12 * (abs(parent) + swyy + 1e-300)

        best_gain = -np.inf
        best_f = -1
        best_thr = 0.0

        # Sample features without replacement.  Visit max_features of them,
        # constants included, but keep going until one non-constant is seen.
        n_found_const = 0
        n_drawn_const = 0
        n_total_const = n_known
        n_visited = 0
        f_i = n_features
        while f_i > n_total_const and (n_visited < max_features or n_visited <= n_found_const + n_drawn_const):
            n_visited += 1
            f_j = n_drawn_const + np.random.randint(0, f_i - n_found_const - n_drawn_const)
            if f_j < n_known:
                tmp = features[n_drawn_const]
                features[n_drawn_const] = features[f_j]
                features[f_j] = tmp
                n_drawn_const += 1
                continue
            f_j += n_found_const
            f = features[f_j]

            # non-zero entries of column f inside this node
            nnz = 0
            lo = np.inf
            hi = -np.inf
            for q in range(indptr[f], indptr[f + 1]):
                r = rows[q]
                pos = where[r]
                if pos >= start and pos < end:
                    v = data[q]
                    nz_val[nnz] = v
                    nz_row[nnz] = r
                    nnz += 1
                    if v < lo:
                        lo = v
                    if v > hi:
                        hi = v
            if nnz < nm:
                if 0.0 < lo:
                    lo = 0.0
                if 0.0 > hi:
                    hi = 0.0
            if nnz == 0 or hi <= lo:
                features[f_j] = features[n_total_const]
                features[n_total_const] = f
                n_found_const += 1
                n_total_const += 1
                continue

            f_i -= 1
            tmp = features[f_i]
            features[f_i] = features[f_j]
            features[f_j] = tmp

            # sorted items: negatives, one aggregated zero block, positives
            if nnz <= 32:
                _argsort_small(nz_val, nnz, order)
                o = order
            else:
                o = np.argsort(nz_val[:nnz])
            zw = sw
            zwy = swy
            for q in range(nnz):
                r = nz_row[q]
                zw -= w[r]
                zwy -= w[r] * y[r]
            n_items = 0
            zero_done = nnz == nm
            for q in range(nnz):
                r = nz_row[o[q]]
                v = nz_val[o[q]]
                if not zero_done and v > 0.0:
                    sv[n_items] = 0.0
                    sw_[n_items] = zw
                    swy_[n_items] = zwy
                    n_items += 1
                    zero_done = True
                sv[n_items] = v
                sw_[n_items] = w[r]
                swy_[n_items] = w[r] * y[r]
                n_items += 1
            if not zero_done:
                sv[n_items] = 0.0
                sw_[n_items] = zw
                swy_[n_items] = zwy
                n_items += 1

            lw = 0.0
            lwy = 0.0
            for t in range(n_items - 1):
                lw += sw_[t]
                lwy += swy_[t]
                a = sv[t]
                b = sv[t + 1]
                if b <= a:
                    continue
                rw = sw - lw
                if min_leaf_weight > 0.0 and (lw < min_leaf_weight or rw < min_leaf_weight):
                    continue
                if rw <= 0.0 or lw <= 0.0:
                    continue
                rwy = swy - lwy
                gain = lwy * lwy / lw + rwy * rwy / rw - parent
                thr = a + (b - a) / 2.0
                if thr >= b:
                    thr = a
                if gain > best_gain + tol:
                    best_gain = gain
                    best_f = f
                    best_thr = thr
                elif gain > best_gain - tol and (f < best_f or (f == best_f and thr < best_thr)):
                    if gain > best_gain:
                        best_gain = gain
                    best_f = f
                    best_thr = thr

        # restore the known-constant prefix and record the new constants
        for c in range(n_known):
            features[c] = constant[c]
        for c in range(n_known, n_total_const):
            constant[c] = features[c]

        if best_f < 0:
            continue

        # partition idx[start:end] so that x <= thr comes first
        for q in range(indptr[best_f], indptr[best_f + 1]):
            r = rows[q]
            pos = where[r]
            if pos >= start and pos < end:
                scratch[r] = data[q]
        p = start
        q = end - 1
        while p <= q:
            if scratch[idx[p]] <= best_thr:
                p += 1
            else:
                tmp = idx[p]
                idx[p] = idx[q]
                idx[q] = tmp
                q -= 1
        mid = p
        for t in range(start, end):
            i = idx[t]
            scratch[i] = 0.0
            where[i] = t
        if mid == start or mid == end:
            continue

        lw = 0.0
        lwy = 0.0
        lwyy = 0.0
        for t in range(start, mid):
            i = idx[t]
            lw += w[i]
            lwy += w[i] * y[i]
            lwyy += w[i] * y[i] * y[i]
        child_sse = _sse(lw, lwy, lwyy) + _sse(sw - lw, swy - lwy, swyy - lwyy)
        dec = _sse(sw, swy, swyy) - child_sse
        if dec < 0.0:
            dec = 0.0

        feature[node] = best_f
        threshold[node] = best_thr
        decrease[node] = crit_scale * dec
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2

        # right first so the left subtree is grown first
        st_node[top] = right[node]
        st_start[top] = mid
        st_end[top] = end
        st_depth[top] = depth + 1
        st_nconst[top] = n_total_const
        top += 1
        st_node[top] = left[node]
        st_start[top] = start
        st_end[top] = mid
        st_depth[top] = depth + 1
        st_nconst[top] = n_total_const
        top += 1

    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        decrease[:n_nodes].copy(),
        node_w[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def apply_tree(X, feature, threshold, left, right, value):
    n = X.shape[0]
    out = np.empty(n)
    for r in range(n):
        node = 0
        while feature[node] != LEAF:
            if X[r, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[r] = value[node]
    return out
