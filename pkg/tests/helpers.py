import numpy as np

from pdwg.mesh import Mesh

# criterion id -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE_RESULTS = {}


def random_triangle(rng, scale=1.0):
    """A random counterclockwise triangle with bounded aspect ratio."""
    while True:
        v = rng.uniform(-1, 1, size=(3, 2)) * scale
        d1, d2 = v[1] - v[0], v[2] - v[0]
        area = 0.5 * (d1[0] * d2[1] - d1[1] * d2[0])
        if area < 0:
            v = v[[0, 2, 1]]
            area = -area
        sides = np.linalg.norm(v - v[[1, 2, 0]], axis=1)
        if area > 0.1 * sides.max() ** 2:
            return v


def single_triangle_mesh(vertices) -> Mesh:
    return Mesh(np.asarray(vertices, dtype=float), [(0, 1, 2)])


REF_TRIANGLE = np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0)])


class RandomPoly:
    """A random polynomial of total degree ``deg`` with value, gradient and Hessian."""

    def __init__(self, rng, deg):
        self.exps = [(d - j, j) for d in range(deg + 1) for j in range(d + 1)]
        self.coef = rng.normal(size=len(self.exps))

    @staticmethod
    def _pow(x, e, order):
        c = 1.0
        for j in range(order):
            c *= e - j
        return c * x ** max(e - order, 0) if e >= order else np.zeros_like(x)

    def deriv(self, x, dx, dy):
        x = np.asarray(x, dtype=float)
        return sum(c * self._pow(x[..., 0], a, dx) * self._pow(x[..., 1], b, dy)
                   for c, (a, b) in zip(self.coef, self.exps))

    def __call__(self, x):
        return self.deriv(x, 0, 0)

    def grad(self, x):
        return np.stack([self.deriv(x, 1, 0), self.deriv(x, 0, 1)], axis=-1)

    def hess(self, x):
        hxy = self.deriv(x, 1, 1)
        return np.stack([np.stack([self.deriv(x, 2, 0), hxy], -1),
                         np.stack([hxy, self.deriv(x, 0, 2)], -1)], -1)
