"""Independent reference computations used by the tests."""

import math


def bernoulli_loglik(b0, b1, xs, ys):
    total = 0.0
    for x, y in zip(xs, ys):
        eta = b0 + b1 * x
        # log(1 + e^eta) without overflow
        soft = eta + math.log1p(math.exp(-eta)) if eta > 0 else math.log1p(math.exp(eta))
        total += y * eta - soft
    return total


def grid_search_logit(xs, ys, center=(0.0, 0.0), half_width=10.0, points=41, resolution=1e-6):
    """Coarse-to-fine grid maximisation of the 1-feature logit likelihood."""
    c0, c1 = center
    w = half_width
    while w > resolution:
        step = 2 * w / (points - 1)
        best = None
        for i in range(points):
            b0 = c0 - w + i * step
            for j in range(points):
                b1 = c1 - w + j * step
                ll = bernoulli_loglik(b0, b1, xs, ys)
                if best is None or ll > best[0]:
                    best = (ll, b0, b1)
        _, c0, c1 = best
        w = 2 * step
    return c0, c1


def finite_difference_gradient(f, beta, h=1e-6):
    grad = []
    for k in range(len(beta)):
        up = list(beta)
        dn = list(beta)
        up[k] += h
        dn[k] -= h
        grad.append((f(up) - f(dn)) / (2 * h))
    return grad
