"""secp256k1 group arithmetic.

Jacobian-coordinate point operations plus a precomputed fixed-base
window table for the generator, sized so that signing stays cheap in
pure Python. Scalars and coordinates are plain Python ints; points at
infinity are represented by Z == 0.
"""

from __future__ import annotations

# Curve: y^2 = x^3 + 7 over F_p
P = 2**256 - 2**32 - 977
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
GX = 0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798
GY = 0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8

_HALF_N = N // 2

JacobianPoint = tuple[int, int, int]
AffinePoint = tuple[int, int]

INFINITY: JacobianPoint = (0, 1, 0)


def is_on_curve(x: int, y: int) -> bool:
    if not (0 <= x < P and 0 <= y < P):
        return False
    return (y * y - x * x * x - 7) % P == 0


def jac_double(pt: JacobianPoint) -> JacobianPoint:
    x1, y1, z1 = pt
    if z1 == 0 or y1 == 0:
        return INFINITY
    a = x1 * x1 % P
    b = y1 * y1 % P
    c = b * b % P
    s = x1 + b
    d = 2 * (s * s - a - c) % P
    e = 3 * a % P
    f = e * e % P
    x3 = (f - 2 * d) % P
    y3 = (e * (d - x3) - 8 * c) % P
    z3 = 2 * y1 * z1 % P
    return (x3, y3, z3)


def jac_add_affine(pt: JacobianPoint, qx: int, qy: int) -> JacobianPoint:
    """Mixed addition: Jacobian + affine."""
    x1, y1, z1 = pt
    if z1 == 0:
        return (qx, qy, 1)
    z1z1 = z1 * z1 % P
    u2 = qx * z1z1 % P
    s2 = qy * z1 * z1z1 % P
    h = (u2 - x1) % P
    r = (s2 - y1) % P
    if h == 0:
        if r == 0:
            return jac_double(pt)
        return INFINITY
    hh = h * h % P
    hhh = h * hh % P
    v = x1 * hh % P
    x3 = (r * r - hhh - 2 * v) % P
    y3 = (r * (v - x3) - y1 * hhh) % P
    z3 = z1 * h % P
    return (x3, y3, z3)


def jac_add(pt: JacobianPoint, qt: JacobianPoint) -> JacobianPoint:
    if qt[2] == 0:
        return pt
    if pt[2] == 0:
        return qt
    qx, qy = to_affine(qt)
    return jac_add_affine(pt, qx, qy)


def to_affine(pt: JacobianPoint) -> AffinePoint:
    x, y, z = pt
    if z == 0:
        raise ZeroDivisionError("point at infinity has no affine form")
    zinv = pow(z, -1, P)
    zinv2 = zinv * zinv % P
    return (x * zinv2 % P, y * zinv2 * zinv % P)


# Fixed-base table: 64 windows of 4 bits, entries [w][k-1] = (16^w * k) * G
# in affine form. Built once at import; signing then costs at most 64
# mixed additions and no doublings.
_WINDOWS = 64
_TABLE: list[list[AffinePoint]] = []


def _build_table() -> None:
    base: JacobianPoint = (GX, GY, 1)
    for _ in range(_WINDOWS):
        row: list[AffinePoint] = []
        acc = INFINITY
        bx, by = to_affine(base)
        for _ in range(15):
            acc = jac_add_affine(acc, bx, by)
            row.append(to_affine(acc))
        _TABLE.append(row)
        base = (acc[0], acc[1], acc[2])
        base = jac_add_affine(base, bx, by)  # 16 * 16^w * G


_build_table()


def mult_base(k: int) -> JacobianPoint:
    """k * G via the fixed-base window table."""
    k %= N
    acc = INFINITY
    w = 0
    while k:
        nib = k & 0xF
        if nib:
            px, py = _TABLE[w][nib - 1]
            acc = jac_add_affine(acc, px, py)
        k >>= 4
        w += 1
    return acc


def mult_point(k: int, qx: int, qy: int) -> JacobianPoint:
    """k * Q for an arbitrary affine point, 4-bit fixed window."""
    k %= N
    if k == 0:
        return INFINITY
    # precompute 1..15 multiples of Q
    table: list[AffinePoint] = [(qx, qy)]
    acc: JacobianPoint = (qx, qy, 1)
    for _ in range(14):
        acc = jac_add_affine(acc, qx, qy)
        table.append(to_affine(acc))
    nibbles = []
    while k:
        nibbles.append(k & 0xF)
        k >>= 4
    out = INFINITY
    for nib in reversed(nibbles):
        for _ in range(4):
            out = jac_double(out)
        if nib:
            px, py = table[nib - 1]
            out = jac_add_affine(out, px, py)
    return out
