"""Frozen constants from the independent scripts in ``tests/oracles``.

Values were produced by ``tests/oracles/make_oracles.py`` and are not
recomputed during the test run.
"""

# Q(-1/4) for the interval of length pi, brute-force series with 10**6 terms
# (remaining tail below |z| * 4a/pi^2 / 10**6 ~ 3.2e-7).
Q_INTERVAL_PI_M025 = [
    [-0.3183097270289272, -0.18169011381612976],
    [-0.18169011381612976, -0.3183097270289272],
]
Q_INTERVAL_PI_M025_TAIL = 0.25 * 4 * 3.141592653589793 / 3.141592653589793**2 / 10**6

# Robin-Dirichlet eigenvalues on (0, pi): phi(pi) = 0, phi'(0) = phi(0),
# from bisection on k cos(k pi) + sin(k pi) = 0, lambda = -k^2.
ROBIN_PI_B1 = [
    -0.6203725071593484,
    -2.7942653668848982,
    -6.844573524591067,
    -12.863360603024717,
    -20.87203053764077,
    -30.876665249864395,
]
