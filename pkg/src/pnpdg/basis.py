"""Modal Legendre bases of degree 2 on the reference element.

1D: {1, xi, (3 xi^2 - 1)/2}, orthogonal on [-1, 1].
2D: the six tensor products of total degree <= 2 on [-1, 1]^2.

The first basis function is 1, so the leading modal coefficient of any
field is its cell average.
"""

import numpy as np

K = 2  # fixed polynomial degree


def legendre_vals(xi):
    """Values of L0, L1, L2 at xi; output shape xi.shape + (3,)."""
    xi = np.asarray(xi, dtype=float)
    return np.stack([np.ones_like(xi), xi, 0.5 * (3.0 * xi * xi - 1.0)], axis=-1)


def legendre_dvals(xi):
    xi = np.asarray(xi, dtype=float)
    return np.stack([np.zeros_like(xi), np.ones_like(xi), 3.0 * xi], axis=-1)


def legendre_d2vals(xi):
    xi = np.asarray(xi, dtype=float)
    z = np.zeros_like(xi)
    return np.stack([z, z, np.full_like(xi, 3.0)], axis=-1)


# reference Gram diagonal: int_{-1}^{1} L_m^2 dxi
GRAM_1D = np.array([2.0, 2.0 / 3.0, 2.0 / 5.0])

# 2D basis as (x-degree, y-degree) pairs, total degree <= 2
PAIRS_2D = ((0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2))


class Basis1D:
    degree = K
    nb = 3
    gram = GRAM_1D

    vals = staticmethod(legendre_vals)
    dvals = staticmethod(legendre_dvals)
    d2vals = staticmethod(legendre_d2vals)

    def __repr__(self):
        return "Basis1D(P2)"


class Basis2D:
    degree = K
    nb = 6
    pairs = PAIRS_2D
    gram = np.array([GRAM_1D[a] * GRAM_1D[b] for a, b in PAIRS_2D])

    @staticmethod
    def _combine(fx, fy):
        return np.stack([fx[..., a] * fy[..., b] for a, b in PAIRS_2D], axis=-1)

    def vals(self, xi, eta):
        return self._combine(legendre_vals(xi), legendre_vals(eta))

    def dxi(self, xi, eta):
        return self._combine(legendre_dvals(xi), legendre_vals(eta))

    def deta(self, xi, eta):
        return self._combine(legendre_vals(xi), legendre_dvals(eta))

    def dxi2(self, xi, eta):
        return self._combine(legendre_d2vals(xi), legendre_vals(eta))

    def deta2(self, xi, eta):
        return self._combine(legendre_vals(xi), legendre_d2vals(eta))

    def dxideta(self, xi, eta):
        return self._combine(legendre_dvals(xi), legendre_dvals(eta))

    def __repr__(self):
        return "Basis2D(P2, total degree)"


BASIS_1D = Basis1D()
BASIS_2D = Basis2D()


def basis_for(mesh):
    return BASIS_1D if mesh.dim == 1 else BASIS_2D


class Tables1D:
    """Basis values at volume quadrature nodes and element endpoints."""

    def __init__(self, rule):
        self.rule = rule
        q = rule.nodes
        self.vol = legendre_vals(q)        # (nq, 3)
        self.dvol = legendre_dvals(q)
        one = np.array(1.0)
        self.at_r = legendre_vals(one)     # trace at xi = +1
        self.at_l = legendre_vals(-one)
        self.d_at_r = legendre_dvals(one)
        self.d_at_l = legendre_dvals(-one)
        self.d2_at_r = legendre_d2vals(one)
        self.d2_at_l = legendre_d2vals(-one)
        # fused projection table: node -> stacked (m, l) basis products
        self.vol_outer = (self.vol[:, :, None] * self.vol[:, None, :]).reshape(rule.n, 9)
        # weighted moment table: node -> weights/2 * (1, xi, xi^2)
        self.mom = 0.5 * rule.weights[:, None] * np.stack([np.ones_like(q), q, q * q], -1)
        self.proj = _polish_projection(self.vol, rule.weights, GRAM_1D)


class Tables2D:
    """Basis values at tensor quadrature nodes and on the four face trace lines.

    Volume arrays are indexed (sx, sy, m); face arrays (s, m) where s runs
    over the quadrature nodes along the face.
    """

    def __init__(self, rule):
        self.rule = rule
        q = rule.nodes
        b = BASIS_2D
        XI = q[:, None] * np.ones((1, rule.n))
        ETA = np.ones((rule.n, 1)) * q[None, :]
        self.vol = b.vals(XI, ETA)
        self.dxi = b.dxi(XI, ETA)
        self.deta = b.deta(XI, ETA)
        ones = np.ones(rule.n)
        # x-faces: traces along eta = q at xi = +/-1
        self.x_r = b.vals(ones, q)
        self.x_l = b.vals(-ones, q)
        self.dx_r = b.dxi(ones, q)
        self.dx_l = b.dxi(-ones, q)
        self.d2x_r = b.dxi2(ones, q)
        self.d2x_l = b.dxi2(-ones, q)
        # y-faces: traces along xi = q at eta = +/-1
        self.y_t = b.vals(q, ones)
        self.y_b = b.vals(q, -ones)
        self.dy_t = b.deta(q, ones)
        self.dy_b = b.deta(q, -ones)
        self.d2y_t = b.deta2(q, ones)
        self.d2y_b = b.deta2(q, -ones)
        # flattened (nq*nq, nb) volume tables and fused products for matmul paths
        n2 = rule.n * rule.n
        self.w2 = rule.weights[:, None] * rule.weights[None, :]
        self.w2_flat = self.w2.reshape(n2)
        self.vol_flat = self.vol.reshape(n2, 6)
        self.dxi_flat = self.dxi.reshape(n2, 6)
        self.deta_flat = self.deta.reshape(n2, 6)
        self.vol_outer = (self.vol_flat[:, :, None] * self.vol_flat[:, None, :]).reshape(n2, 36)
        mom1 = np.stack([np.ones_like(q), q, q * q], -1)
        self.mom = 0.5 * rule.weights[:, None] * mom1   # (nq, 3) one-direction moments
        self.proj = _polish_projection(self.vol_flat, self.w2_flat, BASIS_2D.gram)


def _polish_projection(vals, weights, gram):
    """Projection table P with P @ vals = I to quadratic precision.

    Newton-polishing the quadrature left-inverse makes the projection of any
    exactly-representable polynomial exact in floating point, so constant
    states carry no roundoff seed into the time loop.
    """
    P = (vals * weights[:, None]).T / gram[:, None]
    for _ in range(2):
        P = P + (np.eye(P.shape[0]) - P @ vals) @ P
    return P


_TABLE_CACHE = {}


def tables_for(mesh, rule):
    key = (mesh.dim, rule.n)
    if key not in _TABLE_CACHE:
        _TABLE_CACHE[key] = Tables1D(rule) if mesh.dim == 1 else Tables2D(rule)
    return _TABLE_CACHE[key]
