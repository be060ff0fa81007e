"""Compiled inner loops for CART growth, tree traversal and Pegasos."""

import numpy as np
from numba import njit


@njit(cache=True)
def _splitmix64(state):
    z = state + np.uint64(0x9E3779B97F4A7C15)
    out = z
    out = (out ^ (out >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    out = (out ^ (out >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    out = out ^ (out >> np.uint64(31))
    return z, out


@njit(cache=True)
def _choose_features(n_features, k, state, buf):
    """Partial Fisher-Yates; returns the first k entries sorted ascending."""
    for i in range(n_features):
        buf[i] = i
    for i in range(k):
        state, r = _splitmix64(state)
        j = i + np.int64(r % np.uint64(n_features - i))
        tmp = buf[i]
        buf[i] = buf[j]
        buf[j] = tmp
    return state, np.sort(buf[:k].copy())


@njit(cache=True, nogil=True)
def grow_tree(X, y, samples, n_classes, max_depth, min_samples_split, max_features, seed):
    """Greedy Gini CART over ``X[samples]``.

    Split rule is ``x <= threshold`` with thresholds taken from observed
    values, so any strictly increasing transform of a column yields the same
    partitions. Ties in weighted impurity keep the first candidate (lowest
    feature index, then lowest threshold). ``max_depth < 0`` means unbounded.
    Returns (feature, threshold, left, right, value, n_nodes).
    """
    n_features = X.shape[1]
    n = samples.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap, np.float64)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros((cap, n_classes), np.float64)

    idx = samples.copy()
    stack_node = np.empty(cap, np.int64)
    stack_start = np.empty(cap, np.int64)
    stack_end = np.empty(cap, np.int64)
    stack_depth = np.empty(cap, np.int64)
    stack_node[0], stack_start[0], stack_end[0], stack_depth[0] = 0, 0, n, 0
    top = 1
    n_nodes = 1
    state = np.uint64(seed)
    fbuf = np.empty(n_features, np.int64)
    counts = np.zeros(n_classes, np.float64)
    lc = np.zeros(n_classes, np.float64)
    rc = np.zeros(n_classes, np.float64)

    while top > 0:
        top -= 1
        node = stack_node[top]
        start = stack_start[top]
        end = stack_end[top]
        depth = stack_depth[top]
        m = end - start

        counts[:] = 0.0
        for i in range(start, end):
            counts[y[idx[i]]] += 1.0
        n_present = 0
        for c in range(n_classes):
            value[node, c] = counts[c] / m
            if counts[c] > 0:
                n_present += 1
        if n_present <= 1 or m < min_samples_split or (max_depth >= 0 and depth >= max_depth):
            continue

        if max_features >= n_features:
            feats = np.arange(n_features)
        else:
            state, feats = _choose_features(n_features, max_features, state, fbuf)

        best_score = np.inf
        best_f = -1
        best_t = 0.0
        vals = np.empty(m, np.float64)
        for fi in range(feats.shape[0]):
            f = feats[fi]
            for i in range(m):
                vals[i] = X[idx[start + i], f]
            order = np.argsort(vals, kind="mergesort")
            lc[:] = 0.0
            rc[:] = counts
            sl = 0.0
            sr = 0.0
            for c in range(n_classes):
                sr += counts[c] * counts[c]
            for i in range(m - 1):
                c = y[idx[start + order[i]]]
                sl += 2.0 * lc[c] + 1.0
                lc[c] += 1.0
                sr -= 2.0 * rc[c] - 1.0
                rc[c] -= 1.0
                v = vals[order[i]]
                if v < vals[order[i + 1]]:
                    nl = i + 1.0
                    nr = m - nl
                    score = (nl - sl / nl) + (nr - sr / nr)
                    if score < best_score:
                        best_score = score
                        best_f = f
                        best_t = v
        if best_f < 0:
            continue

        # stable in-place partition
        tmp = np.empty(m, np.int64)
        nl_i = 0
        for i in range(start, end):
            if X[idx[i], best_f] <= best_t:
                tmp[nl_i] = idx[i]
                nl_i += 1
        nr_i = nl_i
        for i in range(start, end):
            if X[idx[i], best_f] > best_t:
                tmp[nr_i] = idx[i]
                nr_i += 1
        for i in range(m):
            idx[start + i] = tmp[i]

        feature[node] = best_f
        threshold[node] = best_t
        l_id = n_nodes
        r_id = n_nodes + 1
        n_nodes += 2
        left[node] = l_id
        right[node] = r_id
        # push right first so the left subtree is expanded first
        stack_node[top], stack_start[top], stack_end[top], stack_depth[top] = (
            r_id, start + nl_i, end, depth + 1)
        top += 1
        stack_node[top], stack_start[top], stack_end[top], stack_depth[top] = (
            l_id, start, start + nl_i, depth + 1)
        top += 1

    return feature, threshold, left, right, value, n_nodes


@njit(cache=True, nogil=True)
def tree_leaf_values(X, feature, threshold, left, right, value, max_depth):
    """Class distribution reached by each row; ``max_depth >= 0`` truncates."""
    out = np.empty((X.shape[0], value.shape[1]), np.float64)
    for i in range(X.shape[0]):
        node = 0
        depth = 0
        while feature[node] >= 0 and (max_depth < 0 or depth < max_depth):
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
            depth += 1
        out[i, :] = value[node, :]
    return out


@njit(cache=True, nogil=True)
def pegasos_ovr(X, y, n_classes, lam, order, project):
    """One-vs-rest Pegasos on rows of ``X`` (bias column already appended).

    ``order`` is (epochs, n) sample visiting order. Returns the average of
    the iterates over the second half of training, and as a training
    monitor the per-epoch objective of the average of all iterates so far.
    """
    n, d = X.shape
    epochs = order.shape[0]
    W = np.zeros((n_classes, d))
    avg = np.zeros((n_classes, d))
    full = np.zeros((n_classes, d))
    n_avg = 0
    objective = np.empty(epochs)
    radius = 1.0 / np.sqrt(lam)
    t = 0
    start_avg = epochs // 2
    for e in range(epochs):
        for k in range(n):
            i = order[e, k]
            t += 1
            eta = 1.0 / (lam * t)
            shrink = 1.0 - eta * lam
            for c in range(n_classes):
                yc = 1.0 if y[i] == c else -1.0
                margin = 0.0
                for j in range(d):
                    margin += W[c, j] * X[i, j]
                margin *= yc
                for j in range(d):
                    W[c, j] *= shrink
                if margin < 1.0:
                    for j in range(d):
                        W[c, j] += eta * yc * X[i, j]
                if project:
                    norm = 0.0
                    for j in range(d):
                        norm += W[c, j] * W[c, j]
                    norm = np.sqrt(norm)
                    if norm > radius:
                        for j in range(d):
                            W[c, j] *= radius / norm
            for c in range(n_classes):
                for j in range(d):
                    full[c, j] += (W[c, j] - full[c, j]) / t
            if e >= start_avg:
                n_avg += 1
                for c in range(n_classes):
                    for j in range(d):
                        avg[c, j] += (W[c, j] - avg[c, j]) / n_avg
        obj = 0.0
        for c in range(n_classes):
            reg = 0.0
            for j in range(d):
                reg += full[c, j] * full[c, j]
            loss = 0.0
            for i in range(n):
                yc = 1.0 if y[i] == c else -1.0
                s = 0.0
                for j in range(d):
                    s += full[c, j] * X[i, j]
                h = 1.0 - yc * s
                if h > 0:
                    loss += h
            obj += 0.5 * lam * reg + loss / n
        objective[e] = obj
    return (avg if n_avg > 0 else W), objective
