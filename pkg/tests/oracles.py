"""Slow, loop-based reference implementations used as test oracles."""

import math


def _h(x, n):
    p = x / n
    return -p * math.log2(p) if p > 0 else 0.0


def onmi_reference(x, y, universe=None):
    x = [set(c) for c in x]
    y = [set(c) for c in y]
    uni = set(universe) if universe is not None else set().union(*x, *y)
    n = len(uni)

    def entropy(c):
        return _h(len(c), n) + _h(n - len(c), n)

    def cond(xs, ys):
        total = 0.0
        for xk in xs:
            best = None
            for yl in ys:
                d = len(xk & yl)
                c = len(xk - yl)
                b = len(yl - xk)
                a = n - b - c - d
                if _h(a, n) + _h(d, n) >= _h(b, n) + _h(c, n):
                    joint = _h(a, n) + _h(b, n) + _h(c, n) + _h(d, n)
                    hy = _h(b + d, n) + _h(a + c, n)
                    val = joint - hy
                    best = val if best is None else min(best, val)
            total += entropy(xk) if best is None else min(best, entropy(xk))
        return total

    hx = sum(entropy(c) for c in x)
    hy = sum(entropy(c) for c in y)
    if max(hx, hy) == 0:
        return 1.0 if {frozenset(c) for c in x} == {frozenset(c) for c in y} else 0.0
    mutual = 0.5 * ((hx - cond(x, y)) + (hy - cond(y, x)))
    return min(1.0, max(0.0, mutual / max(hx, hy)))


def f1_pair(a, b):
    inter = len(set(a) & set(b))
    if inter == 0:
        return 0.0
    precision = inter / len(a)
    recall = inter / len(b)
    return 2 * precision * recall / (precision + recall)


def avg_f1_reference(detected, truth):
    detected = [set(c) for c in detected]
    truth = [set(c) for c in truth]
    fwd = sum(max(f1_pair(d, t) for t in truth) for d in detected) / len(detected)
    back = sum(max(f1_pair(d, t) for d in detected) for t in truth) / len(truth)
    return 0.5 * (fwd + back)
