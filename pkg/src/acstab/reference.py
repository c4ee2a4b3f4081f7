"""Reference values for the built-in regression tables.

These are the published threshold magnitudes the `reproduce --check` mode
compares against (absolute/relative tolerance 1e-3).  Keys are the ratio
dt / (2 eps^2) for the trapezoid schemes and dt / (4 eps^2) for the
two-stage DIRK scheme; values are rounded to three decimals as printed.
"""

from __future__ import annotations

RATIOS = (0.001, 0.01, 0.1, 0.25, 0.5)

# trapezoid (cn): r_1 .. r_4 per ratio
TABLE1 = {
    0.001: (31.639, 48.124, 60.363, 70.530),
    0.01: (10.050, 15.256, 19.123, 22.335),
    0.1: (3.317, 4.942, 6.152, 7.159),
    0.25: (2.236, 3.243, 3.996, 4.625),
    0.5: (1.732, 2.421, 2.941, 3.377),
}

# modified trapezoid (modcn): r_1 .. r_4 per ratio
TABLE2 = {
    0.001: (44.766, 75.889, 98.476, 116.931),
    0.01: (14.283, 24.165, 31.334, 37.192),
    0.1: (4.899, 8.147, 10.497, 12.418),
    0.25: (3.464, 5.641, 7.212, 8.497),
    0.5: (2.828, 4.503, 5.707, 6.694),
}

# two-stage DIRK: r_1, s_1, r_2, s_2, r_3, s_3, r_4, s_4 per ratio
TABLE3 = {
    0.001: (63.277, 159.524, 280.251, 421.311, 580.137, 754.936, 944.371, 1147.391),
    0.01: (20.100, 50.612, 88.857, 133.527, 183.810, 239.141, 299.098, 363.349),
    0.1: (6.633, 16.517, 28.821, 43.140, 59.221, 76.889, 96.012, 116.485),
    0.25: (4.472, 10.958, 18.950, 28.200, 38.552, 49.898, 62.156, 75.262),
    0.5: (3.464, 8.306, 14.188, 20.942, 28.462, 36.675, 45.524, 54.966),
}

# uniqueness thresholds: scheme -> (formula tag, dt_max / eps^2 factor; inf when unrestricted)
TABLE4 = {
    "be": ("EPS2", 1.0),
    "cn": ("TWO_EPS2", 2.0),
    "modcn": ("INF", float("inf")),
    "dirk2": ("EPS2_OVER_MAX_AII", 4.0),
}

CHECK_TOL = 1e-3
