"""Writes coxeter_535.txt: generators of the orientation preserving subgroup of
the compact hyperbolic Coxeter group [5,3,5], conjugated so that the incentre of
the fundamental tetrahedron sits at (0, 0, 1).

The group is a cocompact lattice in PSL(2, C) (with torsion). Regenerate with

    python3 make_coxeter_535.py > coxeter_535.txt
"""

import itertools

import numpy as np

J = np.diag([1.0, 1.0, 1.0, -1.0])


def gram():
    c5 = np.cos(np.pi / 5)
    g = np.eye(4)
    g[0, 1] = g[1, 0] = -c5
    g[1, 2] = g[2, 1] = -0.5
    g[2, 3] = g[3, 2] = -c5
    return g


def normals(g):
    w, v = np.linalg.eigh(g)
    order = np.argsort(-w)  # the single negative eigenvalue last
    w, v = w[order], v[:, order]
    assert (w[:3] > 0).all() and w[3] < 0
    n = v * np.sqrt(np.abs(w))
    assert np.allclose(n @ J @ n.T, g)
    return n


def reflection(n):
    return np.eye(4) - 2.0 * np.outer(n, n) @ J


def herm(v):
    x, y, z, t = v
    return np.array([[t + z, x + 1j * y], [x - 1j * y, t - z]])


def unherm(h):
    t = (h[0, 0] + h[1, 1]).real / 2
    z = (h[0, 0] - h[1, 1]).real / 2
    return np.array([h[0, 1].real, h[0, 1].imag, z, t])


def boundary(v):
    """Null vector -> boundary coordinate zeta with herm(v) = lambda (zeta, 1)(zeta, 1)^H."""
    x, y, z, t = v
    return (x + 1j * y) / (t - z)


def to_zero_inf_one(z1, z2, z3):
    return np.array([[z2 - z3, -z1 * (z2 - z3)], [z1 - z3, -z2 * (z1 - z3)]])


def to_sl2c(lor):
    """g with g herm(v) g^H = herm(lor v), found from three boundary points."""
    pts = [np.array([np.cos(a), np.sin(a), 0.3, 1.0]) for a in (0.4, 2.1, 4.0)]
    pts = [np.array([p[0], p[1], p[2], np.linalg.norm(p[:3])]) for p in pts]
    src = [boundary(p) for p in pts]
    dst = [boundary(lor @ p) for p in pts]
    g = np.linalg.inv(to_zero_inf_one(*dst)) @ to_zero_inf_one(*src)
    g = g / np.sqrt(np.linalg.det(g))
    for v in np.random.default_rng(1).normal(size=(5, 4)):
        assert np.allclose(g @ herm(v) @ g.conj().T, herm(lor @ v), atol=1e-9)
    return g


def half_space(v):
    """Hyperboloid point -> upper half-space (x, y, z)."""
    h = herm(v)
    z = 1.0 / h[1, 1].real
    zeta = h[0, 1] * z
    return np.array([zeta.real, zeta.imag, z])


def hyperboloid(p):
    x, y, z = p
    zeta = x + 1j * y
    h = np.array([[abs(zeta) ** 2 + z * z, zeta], [np.conj(zeta), 1.0]]) / z
    return unherm(h)


def mobius(g, p):
    """Quaternion evaluation (a w + b)(c w + d)^-1, w = x + y i + z j."""
    def q(cx):
        return np.array([cx.real, cx.imag, 0.0, 0.0])

    def mul(a, b):
        a0, a1, a2, a3 = a
        b0, b1, b2, b3 = b
        return np.array([
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ])

    def inv(a):
        return np.array([a[0], -a[1], -a[2], -a[3]]) / (a @ a)

    w = np.array([p[0], p[1], p[2], 0.0])
    num = mul(q(g[0, 0]), w) + q(g[0, 1])
    den = mul(q(g[1, 0]), w) + q(g[1, 1])
    r = mul(num, inv(den))
    return r[:3]


def main():
    n = normals(gram())
    refl = [reflection(v) for v in n]
    lorentz = [refl[0] @ refl[1], refl[1] @ refl[2], refl[2] @ refl[3]]

    centre = np.linalg.solve(n @ J, -np.ones(4))
    centre /= np.sqrt(-(centre @ J @ centre))
    if centre[3] < 0:
        centre = -centre
    p0 = half_space(centre)

    lifts = [to_sl2c(l) for l in lorentz]
    # The Hermitian action and the Mobius action agree up to inversion; pick
    # the convention that matches the quaternion formula.
    probe = np.array([0.3, -0.2, 1.7])
    if not np.allclose(mobius(lifts[0], probe), half_space(lorentz[0] @ hyperboloid(probe)), atol=1e-9):
        lifts = [np.linalg.inv(g).conj().T for g in lifts]
    for g, l in zip(lifts, lorentz):
        assert np.allclose(mobius(g, probe), half_space(l @ hyperboloid(probe)), atol=1e-9)

    sz = np.sqrt(p0[2])
    zeta = p0[0] + 1j * p0[1]
    h = np.array([[1 / sz, -zeta / sz], [0, sz]])
    hinv = np.linalg.inv(h)
    gens = [h @ g @ hinv for g in lifts]
    assert np.allclose(mobius(h, p0), [0, 0, 1], atol=1e-12)

    orders = []
    for g in gens:
        assert abs(np.linalg.det(g) - 1) < 1e-12
        k, m = 1, g.copy()
        while not (np.allclose(m, np.eye(2), atol=1e-9) or np.allclose(m, -np.eye(2), atol=1e-9)):
            m, k = m @ g, k + 1
            assert k < 20
        orders.append(k)

    print("# Rotation subgroup of the compact Coxeter group [5,3,5]; incentre at (0,0,1).")
    print("# Generated by make_coxeter_535.py. Elliptic generators of orders " + ", ".join(map(str, orders)) + ".")
    print("# re(a),im(a),re(b),im(b),re(c),im(c),re(d),im(d)")
    for g in gens:
        vals = itertools.chain.from_iterable((z.real, z.imag) for z in g.flatten())
        print(",".join(f"{v:.17e}" for v in vals))


if __name__ == "__main__":
    main()
