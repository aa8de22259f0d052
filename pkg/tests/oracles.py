"""Straight-from-the-formula per-pixel reference implementations.

Deliberately loop-based and independent of the package internals.
"""
import colorsys
import math


def hsv_pixel(r, g, b):
    return colorsys.rgb_to_hsv(r / 255.0, g / 255.0, b / 255.0)


def _clamp(i, n):
    return min(max(i, 0), n - 1)


def window_values(grid, row, col, k):
    h, w = len(grid), len(grid[0])
    before = math.ceil(k / 2) - 1
    after = k // 2
    return [
        grid[_clamp(i, h)][_clamp(j, w)]
        for i in range(row - before, row + after + 1)
        for j in range(col - before, col + after + 1)
    ]


def mean_filter(grid, k):
    h, w = len(grid), len(grid[0])
    out = []
    for r in range(h):
        row = []
        for c in range(w):
            vals = window_values(grid, r, c, k)
            row.append(math.fsum(vals) / len(vals))
        out.append(row)
    return out


def block_energy(grid, k):
    """(1/n) * sum (V_i - mean)^2 over the window, two passes."""
    h, w = len(grid), len(grid[0])
    out = []
    for r in range(h):
        row = []
        for c in range(w):
            vals = window_values(grid, r, c, k)
            mean = math.fsum(vals) / len(vals)
            row.append(math.fsum((v - mean) ** 2 for v in vals) / len(vals))
        out.append(row)
    return out


def hue_filter(h, p):
    return (0.5 * (math.cos(2 * math.pi * h) + 1.0)) ** p


def lut_lookup(labels, weights, void_weight, void=255):
    return [[void_weight if v == void else weights[v] for v in row] for row in labels]


def center_factor(x, y, m, n, sigma_sq):
    d = math.sqrt((x - m / 2) ** 2 + (y - n / 2) ** 2)
    return 2.0 + math.exp(-(d ** 2) / (sigma_sq * max(m, n)))
