"""Regression trees (CART) compiled with numba, plus forest and boosting wrappers.

Features are binned once per fit (see :class:`Binned`): every distinct value of a column gets its
own bin (columns with more than ``MAX_BINS`` values fall back to quantile bins),
so for gene-valued inputs the split search is exact. Split thresholds are
midpoints between adjacent bin values and prediction works on raw inputs.

Trees are stored as flat node arrays; ``feature[i] < 0`` marks a leaf.
"""
from __future__ import annotations

import numba
import numpy as np

LEAF = -1
MAX_BINS = 256


class Binned:
    """Binned training matrix.

    ``codes`` is feature-major, shape (d, n). Each column's most frequent bin is
    its default; ``row_ptr``/``entry_feat``/``entry_bin`` list, per row, only the
    entries that differ from the default (CSR), which keeps one-hot inputs cheap.
    ``thresholds[f, b]`` separates bin ``b`` from bin ``b + 1`` of column ``f``.
    """

    def __init__(self, X: np.ndarray):
        n, d = X.shape
        self.codes = np.empty((d, n), dtype=np.int32)
        self.n_bins = np.empty(d, dtype=np.int64)
        self.default = np.empty(d, dtype=np.int64)
        cuts = []
        for f in range(d):
            col = X[:, f]
            uniq = np.unique(col)
            if len(uniq) > MAX_BINS:
                uniq = np.unique(np.quantile(col, np.linspace(0, 1, MAX_BINS)))
            mids = 0.5 * (uniq[1:] + uniq[:-1])
            self.codes[f] = np.searchsorted(mids, col, side="left")
            self.n_bins[f] = len(uniq)
            self.default[f] = np.bincount(self.codes[f]).argmax()
            cuts.append(mids)
        width = max(1, max(len(c) for c in cuts))
        self.thresholds = np.full((d, width), np.inf)
        for f, c in enumerate(cuts):
            self.thresholds[f, :len(c)] = c
        sparse = self.codes.T != self.default[None, :]
        self.row_ptr = np.concatenate([[0], np.cumsum(sparse.sum(axis=1))]).astype(np.int64)
        rows, feats = np.nonzero(sparse)
        self.entry_feat = feats.astype(np.int64)
        self.entry_bin = self.codes[feats, rows].astype(np.int64)

    def args(self):
        return (self.codes, self.n_bins, self.default, self.row_ptr, self.entry_feat, self.entry_bin,
                self.thresholds)


@numba.njit(cache=True)
def _best_split(y, idx, start, end, min_leaf, n_bins, default, row_ptr, entry_feat, entry_bin,
                allowed, sums, counts, touched):
    n = end - start
    total = 0.0
    for i in range(start, end):
        total += y[idx[i]]
    best_gain = total * total / n + 1e-12 * (abs(total) + 1.0)
    best_feat = -1
    best_bin = -1
    n_touched = 0
    for i in range(start, end):
        r = idx[i]
        yr = y[r]
        for e in range(row_ptr[r], row_ptr[r + 1]):
            f = entry_feat[e]
            if not allowed[f]:
                continue
            if counts[f, n_bins[f]] == 0:
                # first hit in this node: clear the feature's histogram
                for b in range(n_bins[f]):
                    sums[f, b] = 0.0
                    counts[f, b] = 0
                counts[f, n_bins[f]] = 1
                touched[n_touched] = f
                n_touched += 1
            sums[f, entry_bin[e]] += yr
            counts[f, entry_bin[e]] += 1
    for t in range(n_touched):
        f = touched[t]
        nb = n_bins[f]
        counts[f, nb] = 0
        # the default bin holds whatever the sparse entries did not
        s_other = 0.0
        c_other = 0
        for b in range(nb):
            s_other += sums[f, b]
            c_other += counts[f, b]
        sums[f, default[f]] = total - s_other
        counts[f, default[f]] = n - c_other
        left = 0.0
        nl = 0
        for b in range(nb - 1):
            if counts[f, b] == 0:
                continue
            left += sums[f, b]
            nl += counts[f, b]
            if nl < min_leaf:
                continue
            nr = n - nl
            if nr < min_leaf:
                break
            right = total - left
            gain = left * left / nl + right * right / nr
            if gain > best_gain:
                best_gain = gain
                best_feat = f
                best_bin = b
    return best_feat, best_bin


@numba.njit(cache=True)
def build_tree(codes, n_bins, default, row_ptr, entry_feat, entry_bin, thresholds, y, sample_idx,
               max_depth, min_leaf, max_features, seed):
    """Grow one tree on rows ``sample_idx`` (repeats allowed, e.g. a bootstrap).

    ``max_features < d`` draws that many candidate features per node. Returns
    the node arrays and the fitted value for every entry of ``sample_idx``.
    """
    if seed >= 0:
        np.random.seed(seed)
    n = sample_idx.shape[0]
    d = codes.shape[0]
    cap = 2 * n + 1
    feature = np.full(cap, LEAF, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    idx = sample_idx.copy()
    pos = np.arange(n)
    fitted = np.empty(n)
    stack = np.empty((cap, 4), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = 0
    stack[0, 2] = n
    stack[0, 3] = 0
    top = 1
    n_nodes = 1
    perm = np.arange(d)
    allowed = np.ones(d, dtype=np.bool_)
    tmp = np.empty(n, dtype=np.int64)
    tmp_pos = np.empty(n, dtype=np.int64)
    width = thresholds.shape[1] + 2
    sums = np.zeros((d, width))
    # column n_bins[f] flags "histogram in use" during a node's pass
    counts = np.zeros((d, width), dtype=np.int64)
    touched = np.empty(d, dtype=np.int64)
    while top > 0:
        top -= 1
        node = stack[top, 0]
        start = stack[top, 1]
        end = stack[top, 2]
        depth = stack[top, 3]
        s = 0.0
        for i in range(start, end):
            s += y[idx[i]]
        value[node] = s / (end - start)
        f = -1
        b = -1
        if depth < max_depth and end - start >= 2 * min_leaf:
            if max_features < d:
                allowed[:] = False
                # partial Fisher-Yates draw of max_features columns
                for i in range(max_features):
                    j = i + np.random.randint(d - i)
                    k = perm[i]
                    perm[i] = perm[j]
                    perm[j] = k
                    allowed[perm[i]] = True
            f, b = _best_split(y, idx, start, end, min_leaf, n_bins, default, row_ptr, entry_feat,
                               entry_bin, allowed, sums, counts, touched)
        if f < 0:
            for i in range(start, end):
                fitted[pos[i]] = value[node]
            continue
        lo = start
        hi = 0
        for i in range(start, end):
            r = idx[i]
            if codes[f, r] <= b:
                idx[lo] = r
                pos[lo] = pos[i]
                lo += 1
            else:
                tmp[hi] = r
                tmp_pos[hi] = pos[i]
                hi += 1
        for i in range(hi):
            idx[lo + i] = tmp[i]
            pos[lo + i] = tmp_pos[i]
        feature[node] = f
        threshold[node] = thresholds[f, b]
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack[top, 0] = n_nodes + 1
        stack[top, 1] = lo
        stack[top, 2] = end
        stack[top, 3] = depth + 1
        top += 1
        stack[top, 0] = n_nodes
        stack[top, 1] = start
        stack[top, 2] = lo
        stack[top, 3] = depth + 1
        top += 1
        n_nodes += 2
    return (feature[:n_nodes].copy(), threshold[:n_nodes].copy(), left[:n_nodes].copy(),
            right[:n_nodes].copy(), value[:n_nodes].copy(), fitted)


@numba.njit(cache=True)
def predict_sum(feature, threshold, left, right, value, roots, X):
    """Sum of the trees' predictions; node arrays are concatenated with absolute child indices."""
    n = X.shape[0]
    out = np.zeros(n)
    for t in range(roots.shape[0]):
        for i in range(n):
            node = roots[t]
            while feature[node] >= 0:
                if X[i, feature[node]] <= threshold[node]:
                    node = left[node]
                else:
                    node = right[node]
            out[i] += value[node]
    return out


class TreeEnsemble:
    """Concatenated storage for one or more trees."""

    def __init__(self):
        self._parts = []
        self._packed = None

    def add(self, feature, threshold, left, right, value) -> None:
        self._parts.append((feature, threshold, left, right, value))
        self._packed = None

    def __len__(self):
        return len(self._parts)

    def _pack(self):
        cols = [[], [], [], [], []]
        roots = []
        offset = 0
        for f, t, l, r, v in self._parts:
            cols[0].append(f)
            cols[1].append(t)
            cols[2].append(np.where(l >= 0, l + offset, -1))
            cols[3].append(np.where(r >= 0, r + offset, -1))
            cols[4].append(v)
            roots.append(offset)
            offset += len(f)
        self._packed = tuple(np.concatenate(c) for c in cols) + (np.asarray(roots, dtype=np.int64),)

    def predict_sum(self, X) -> np.ndarray:
        if self._packed is None:
            self._pack()
        return predict_sum(*self._packed, np.ascontiguousarray(X, dtype=float))


def _prepare(X, y):
    X = np.ascontiguousarray(X, dtype=float)
    y = np.ascontiguousarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
        raise ValueError("X must be 2-D with one row per target")
    return X, y


class CART:
    def __init__(self, max_depth: int = 12, min_leaf: int = 2, seed: int = 0):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.seed = seed

    def fit(self, X, y):
        X, y = _prepare(X, y)
        binned = Binned(X)
        self.trees_ = TreeEnsemble()
        tree = build_tree(*binned.args(), y, np.arange(len(y)), self.max_depth, self.min_leaf,
                          X.shape[1], -1)
        self.trees_.add(*tree[:5])
        return self

    def predict(self, X):
        return self.trees_.predict_sum(X)


class RandomForest:
    """Bagged CART with sqrt(d) candidate features per split."""

    def __init__(self, n_trees: int = 500, max_depth: int = 64, min_leaf: int = 2,
                 max_features: str | int = "sqrt", seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.seed = seed

    def fit(self, X, y):
        X, y = _prepare(X, y)
        n, d = X.shape
        mf = max(1, int(np.sqrt(d))) if self.max_features == "sqrt" else int(self.max_features)
        binned = Binned(X).args()
        rng = np.random.default_rng(self.seed)
        self.trees_ = TreeEnsemble()
        for _ in range(self.n_trees):
            boot = rng.integers(0, n, n)
            tree = build_tree(*binned, y, boot, self.max_depth, self.min_leaf, mf,
                              int(rng.integers(2 ** 31)))
            self.trees_.add(*tree[:5])
        return self

    def predict(self, X):
        return self.trees_.predict_sum(X) / len(self.trees_)


class GradientBoostedTrees:
    """Least-squares gradient boosting of depth-limited CART."""

    def __init__(self, n_trees: int = 300, max_depth: int = 6, learning_rate: float = 0.05,
                 min_leaf: int = 20, seed: int = 0):
        self.n_trees = n_trees
        self.max_depth = max_depth
        self.learning_rate = learning_rate
        self.min_leaf = min_leaf
        self.seed = seed

    def fit(self, X, y):
        X, y = _prepare(X, y)
        n, d = X.shape
        binned = Binned(X).args()
        self.base_ = float(y.mean())
        pred = np.full(n, self.base_)
        rows = np.arange(n)
        self.trees_ = TreeEnsemble()
        for _ in range(self.n_trees):
            f, t, l, r, v, fitted = build_tree(*binned, y - pred, rows, self.max_depth, self.min_leaf, d, -1)
            self.trees_.add(f, t, l, r, v * self.learning_rate)
            pred += self.learning_rate * fitted
        return self

    def predict(self, X):
        return self.base_ + self.trees_.predict_sum(X)
