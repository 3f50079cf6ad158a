"""Reference triangle: Lagrange shape functions and symmetric quadrature rules.

Reference coordinates (xi, eta) live on the unit triangle
{xi >= 0, eta >= 0, xi + eta <= 1} with barycentric coordinates
(1 - xi - eta, xi, eta).  Local node ordering follows the VTK quadratic
triangle: corners first, then the midpoints of edges (0,1), (1,2), (2,0).
"""

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

# Barycentric coordinates of the local nodes per degree.
_NODES_P1 = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
_NODES_P2 = np.array(
    [
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.5, 0.5, 0.0],
        [0.0, 0.5, 0.5],
        [0.5, 0.0, 0.5],
    ]
)


@dataclass(frozen=True)
class ReferenceElement:
    """Lagrange triangle of degree 1 (3 nodes) or 2 (6 nodes)."""

    degree: int

    def __post_init__(self):
        if self.degree not in (1, 2):
            raise ValidationError(f"element degree must be 1 or 2, got {self.degree}")

    @property
    def n_local(self):
        return 3 if self.degree == 1 else 6

    @property
    def local_nodes_barycentric(self):
        return _NODES_P1 if self.degree == 1 else _NODES_P2

    def shape_values(self, points):
        """Shape function values at reference points.

        points: array (..., 2) of (xi, eta).  Returns (..., n_local).
        """
        pts = np.asarray(points, dtype=float)
        xi, eta = pts[..., 0], pts[..., 1]
        lam0 = 1.0 - xi - eta
        if self.degree == 1:
            return np.stack([lam0, xi, eta], axis=-1)
        return np.stack(
            [
                lam0 * (2.0 * lam0 - 1.0),
                xi * (2.0 * xi - 1.0),
                eta * (2.0 * eta - 1.0),
                4.0 * lam0 * xi,
                4.0 * xi * eta,
                4.0 * eta * lam0,
            ],
            axis=-1,
        )

    def shape_gradients(self, points):
        """Reference gradients d/d(xi,eta) at reference points: (..., n_local, 2)."""
        pts = np.asarray(points, dtype=float)
        xi, eta = pts[..., 0], pts[..., 1]
        one = np.ones_like(xi)
        zero = np.zeros_like(xi)
        if self.degree == 1:
            g = np.stack(
                [
                    np.stack([-one, -one], axis=-1),
                    np.stack([one, zero], axis=-1),
                    np.stack([zero, one], axis=-1),
                ],
                axis=-2,
            )
            return g
        lam0 = 1.0 - xi - eta
        # d lam0 / d xi = d lam0 / d eta = -1
        g0 = 1.0 - 4.0 * lam0
        return np.stack(
            [
                np.stack([g0, g0], axis=-1),
                np.stack([4.0 * xi - 1.0, zero], axis=-1),
                np.stack([zero, 4.0 * eta - 1.0], axis=-1),
                np.stack([4.0 * (lam0 - xi), -4.0 * xi], axis=-1),
                np.stack([4.0 * eta, 4.0 * xi], axis=-1),
                np.stack([-4.0 * eta, 4.0 * (lam0 - eta)], axis=-1),
            ],
            axis=-2,
        )


@dataclass(frozen=True)
class QuadratureRule:
    """Symmetric rule on the reference triangle; weights sum to 1/2."""

    exactness: int
    points: np.ndarray  # (n_qp, 2) reference coordinates
    weights: np.ndarray  # (n_qp,)

    @property
    def n_points(self):
        return len(self.weights)

    @property
    def points_barycentric(self):
        xi, eta = self.points[:, 0], self.points[:, 1]
        return np.stack([1.0 - xi - eta, xi, eta], axis=-1)


def _orbit(a, b, c):
    """All distinct permutations of a barycentric triple, in a fixed order."""
    seen = []
    for perm in ((a, b, c), (b, c, a), (c, a, b), (a, c, b), (c, b, a), (b, a, c)):
        if not any(np.allclose(perm, s) for s in seen):
            seen.append(perm)
    return seen

def _rule_from_orbits(exactness, orbits):
    pts, wts = [], []
    for (a, b, c), w in orbits:
        for lam in _orbit(a, b, c):
            pts.append([lam[1], lam[2]])  # (xi, eta) from barycentric
            wts.append(w)
    points = np.array(pts)
    weights = np.array(wts) * 0.5  # normalise: tabulated weights sum to 1
    return QuadratureRule(exactness, points, weights)


# Dunavant-style symmetric rules, tabulated for the unit-weight triangle.
_RULES = {
    2: [((2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0), 1.0 / 3.0)],
    4: [
        ((0.816847572980459, 0.091576213509771, 0.091576213509771), 0.109951743655322),
        ((0.108103018168070, 0.445948490915965, 0.445948490915965), 0.223381589678011),
    ],
    6: [
        ((0.873821971016996, 0.063089014491502, 0.063089014491502), 0.050844906370207),
        ((0.501426509658179, 0.249286745170910, 0.249286745170911), 0.116786275726379),
        ((0.636502499121399, 0.310352451033785, 0.053145049844816), 0.082851075618374),
    ],
}


def quadrature(exactness):
    """Quadrature rule on the reference triangle, exact for the given degree.

    Supported exactness: 2 (3 points), 4 (6 points), 6 (12 points).
    """
    if exactness not in _RULES:
        raise ValidationError(
            f"unsupported quadrature exactness {exactness}; choose one of 2, 4, 6"
        )
    return _rule_from_orbits(exactness, _RULES[exactness])


def default_quadrature(degree):
    """Default rule per element degree: 4 for flat, 6 for quadratic elements."""
    return quadrature(4 if degree == 1 else 6)


def reference_monomial_integral(p, q):
    """Closed form of integral of xi^p * eta^q over the unit triangle."""
    from math import factorial

    return factorial(p) * factorial(q) / factorial(p + q + 2)
