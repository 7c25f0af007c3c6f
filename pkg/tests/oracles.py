"""Independent reference implementations used as test oracles.

These deliberately avoid the production decoder and accumulator: costs are
re-derived straight from genes and the macro spec, layer by layer.
"""
import itertools
import math

import numpy as np

KS = (3, 5, 7)
ES = (3, 4, 6)


def _round(c_num, w, m):
    # exact rational rounding: ceil(c * w / m) * m
    from fractions import Fraction
    v = Fraction(c_num) * Fraction(w)
    return max(m, math.ceil(v / m) * m)


def layer_list(genome, macro):
    """Primitive layers as (kind, cin, cout, k, groups, out_hw, bias) tuples."""
    s = genome.scheme
    res = s.resolution_choices[genome.r_idx]
    w = s.width_choices[genome.w_idx]
    m = macro.channel_round
    exit_stage = genome.exit if genome.exit is not None else s.n_stages
    L = []
    hw = -(-res // macro.stem_stride)
    c = _round(macro.stem_channels, w, m)
    L += [("conv", 3, c, 3, 1, hw, macro.count_bias), ("bn", c, c, 0, 0, hw, False)]
    for st in range(exit_stage):
        cout = _round(macro.stage_widths[st], w, m)
        genes = genome.levels[st * 4:(st + 1) * 4]
        for pos, v in enumerate(genes):
            if v == 0:
                continue
            mask = (v - 1) // 9 + 1
            K, E = KS[((v - 1) % 9) // 3], ES[(v - 1) % 3]
            stride = macro.stage_strides[st] if pos == 0 else 1
            hw_out = -(-hw // stride)
            mid = _round(c * E, 1, m)
            b = macro.count_bias
            if mask & 1:
                L += [("conv", c, mid, 1, 1, hw, b), ("bn", mid, mid, 0, 0, hw, False),
                      ("conv", mid, mid, K, mid, hw_out, b), ("bn", mid, mid, 0, 0, hw_out, False),
                      ("conv", mid, cout, 1, 1, hw_out, b), ("bn", cout, cout, 0, 0, hw_out, False)]
            if mask & 2:
                L += [("conv", c, cout, 1, 1, hw_out, b), ("bn", cout, cout, 0, 0, hw_out, False)]
            if mask & 4:
                if stride > 1:
                    L.append(("maxpool", c, c, 3, c, hw_out, False))
                if c != cout:
                    L.append(("conv", c, cout, 1, 1, hw_out, b))
                L.append(("bn", cout, cout, 0, 0, hw_out, False))
            c, hw = cout, hw_out
    if exit_stage == s.n_stages:
        h = _round(macro.head_channels, w, m)
        f = _round(macro.feature_channels, w, m)
        L += [("conv", c, h, 1, 1, hw, False), ("bn", h, h, 0, 0, hw, False),
              ("gap", h, h, hw, h, 1, False), ("linear", h, f, 0, 0, 1, True),
              ("linear", f, macro.n_classes, 0, 0, 1, True)]
    else:
        L += [("gap", c, c, hw, c, 1, False), ("linear", c, macro.n_classes, 0, 0, 1, True)]
    return L


def oracle_cost(genome, macro):
    params = macs = 0
    for kind, cin, cout, k, groups, hw, bias in layer_list(genome, macro):
        if kind == "conv":
            wts = k * k * cin * cout // groups
            params += wts + (cout if bias else 0)
            macs += wts * hw * hw
        elif kind == "bn":
            params += 2 * cout if macro.count_norm_params else 0
            macs += 2 * cout * hw * hw
        elif kind == "maxpool":
            macs += k * k * cout * hw * hw
        elif kind == "gap":
            macs += cin * k * k
        elif kind == "linear":
            params += cin * cout + cout
            macs += cin * cout
        else:
            raise AssertionError(kind)
    return params, macs


def dominates(a, b):
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def brute_fronts(points):
    pts = [tuple(p) for p in points]
    remaining = set(range(len(pts)))
    fronts = []
    while remaining:
        front = sorted(i for i in remaining
                       if not any(dominates(pts[j], pts[i]) for j in remaining if j != i))
        fronts.append(front)
        remaining -= set(front)
    return fronts


def grid_hypervolume(points, ref, cell=1.0):
    """Area dominated by ``points`` inside the reference box, by counting cells.

    Every coordinate must be a multiple of ``cell``; the count is then exact.
    """
    pts = np.asarray(points, dtype=float)
    if len(pts) == 0:
        return 0.0
    lo = pts.min(axis=0)
    nx = int(round((ref[0] - lo[0]) / cell))
    ny = int(round((ref[1] - lo[1]) / cell))
    cx = lo[0] + (np.arange(nx) + 0.5) * cell
    cy = lo[1] + (np.arange(ny) + 0.5) * cell
    X, Y = np.meshgrid(cx, cy, indexing="ij")
    covered = np.zeros(X.shape, dtype=bool)
    for p in pts:
        covered |= (X >= p[0]) & (Y >= p[1])
    return int(covered.sum()) * cell * cell


def brute_spearman(a, b):
    from scipy.stats import rankdata
    ra, rb = rankdata(a), rankdata(b)
    return float(np.corrcoef(ra, rb)[0, 1])


def all_simplex_points(m, p):
    return sorted(c for c in itertools.product(range(p + 1), repeat=m) if sum(c) == p)


def _mask_superset(a, b):
    return a != b and (a & b) == a


def perturbations(g, rng):
    """One-gene increases that the cost model must not penalize."""
    s = g.scheme
    out = []
    if g.w_idx + 1 < len(s.width_choices):
        out.append(("W", g.replace(w_idx=g.w_idx + 1), True))
    if g.r_idx + 1 < len(s.resolution_choices):
        out.append(("R", g.replace(r_idx=g.r_idx + 1), False))
    if s.has_exits and g.exit < s.n_exits:
        out.append(("X", g.replace(exit=g.exit + 1), True))
    i = int(rng.integers(s.n_levels))
    v = g.levels[i]
    if v:
        mask, ke = (v - 1) // 9 + 1, (v - 1) % 9
        k, e = ke // 3, ke % 3
        def with_level(mask, k, e):
            lv = list(g.levels)
            lv[i] = (mask - 1) * 9 + k * 3 + e + 1
            return g.replace(levels=tuple(lv))
        if k < 2:
            out.append(("K", with_level(mask, k + 1, e), True))
        if e < 2:
            out.append(("E", with_level(mask, k, e + 1), True))
        if s.parallel:
            supers = [m for m in range(1, 8) if _mask_superset(mask, m)]
            if supers:
                out.append(("A", with_level(int(rng.choice(supers)), k, e), True))
    return out
