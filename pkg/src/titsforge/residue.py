"""Exact truncated arithmetic over p-adic valuation rings.

The ground field K is either Q_p (ramification index e = 1, uniformizer
pi = p) or a totally ramified quadratic extension Q_p(pi) with pi^2 = p
(e = 2).  Elements of O/pi^M are stored as pairs (a, b) of canonical
integer residues encoding a + b*pi; for e = 1 the pair is (a, 0).  Every
operation is exact modulo pi^M, so identical inputs give bit-identical
outputs.

Dividing a canonical representative by pi^s zero-fills the top s
pi-digits; callers that divide must budget guard digits (precision
M >= e*(n+3) for work out to radius n keeps every quantity that is ever
compared inside the trusted low digits).
"""

from __future__ import annotations

from dataclasses import dataclass, field

Elem = tuple[int, int]

__all__ = [
    "Elem",
    "PrecisionError",
    "Ring",
    "ScaledMatrix",
    "mat_adj",
    "mat_det_entries",
    "mat_diag",
    "mat_elementary",
    "mat_eq",
    "mat_from_ints",
    "mat_identity",
    "mat_inv",
    "mat_is_sl3o",
    "mat_min_val",
    "mat_mod_pi",
    "mat_mul",
    "mat_normalize",
    "mat_scale_col",
    "mat_scale_entries",
    "mat_truncate",
]


class PrecisionError(ArithmeticError):
    """Every significant digit was consumed by pi-division."""


def _vp(n: int, p: int, cap: int) -> int:
    if n == 0:
        return cap
    v = 0
    while v < cap and n % p == 0:
        n //= p
        v += 1
    return v


@dataclass(frozen=True)
class Ring:
    """The truncated valuation ring O/pi^M with residue field F_p.

    p: residue characteristic, a prime.
    e: ramification index over Q_p, 1 or 2.
    M: working precision in pi-digits, at least 1.
    """

    p: int
    e: int
    M: int

    def __post_init__(self) -> None:
        if self.e not in (1, 2):
            raise ValueError("ramification index must be 1 or 2")
        if self.M < 1:
            raise ValueError("precision must be positive")
        if self.e == 1:
            hi, lo = self.M, 0
        else:
            hi, lo = (self.M + 1) // 2, self.M // 2
        # hi/lo: p-precision of the a/b component; pa/pb: their moduli.
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "pa", self.p**hi)
        object.__setattr__(self, "pb", self.p**lo)

    # -- element constructors ------------------------------------------

    def zero(self) -> Elem:
        return (0, 0)

    def one(self) -> Elem:
        return (1 % self.pa, 0)

    def pi(self) -> Elem:
        if self.e == 1:
            return (self.p % self.pa, 0)
        return (0, 1 % self.pb)

    def from_int(self, n: int) -> Elem:
        return (n % self.pa, 0)

    def from_pair(self, a: int, b: int) -> Elem:
        if self.e == 1 and b % self.p:
            raise ValueError("pi-part must vanish when e = 1")
        return (a % self.pa, b % self.pb)

    def pi_power(self, t: int) -> Elem:
        """Canonical representative of pi^t, 0 <= t."""
        if t >= self.M:
            return (0, 0)
        if self.e == 1:
            return (self.p**t % self.pa, 0)
        if t % 2 == 0:
            return (self.p ** (t // 2) % self.pa, 0)
        return (0, self.p ** (t // 2) % self.pb)

    # -- ring operations -----------------------------------------------

    def add(self, x: Elem, y: Elem) -> Elem:
        return ((x[0] + y[0]) % self.pa, (x[1] + y[1]) % self.pb)

    def sub(self, x: Elem, y: Elem) -> Elem:
        return ((x[0] - y[0]) % self.pa, (x[1] - y[1]) % self.pb)

    def neg(self, x: Elem) -> Elem:
        return ((-x[0]) % self.pa, (-x[1]) % self.pb)

    def mul(self, x: Elem, y: Elem) -> Elem:
        xa, xb = x
        ya, yb = y
        return (
            (xa * ya + self.p * xb * yb) % self.pa,
            (xa * yb + xb * ya) % self.pb,
        )

    def val(self, x: Elem) -> int:
        """pi-adic valuation, capped at the precision M."""
        if self.e == 1:
            return _vp(x[0], self.p, self.M)
        va = 2 * _vp(x[0], self.p, self.hi)
        vb = 2 * _vp(x[1], self.p, self.lo) + 1
        return min(va, vb, self.M)

    def is_unit(self, x: Elem) -> bool:
        return x[0] % self.p != 0

    def inv(self, x: Elem) -> Elem:
        """Inverse of a unit; (a + b*pi)^-1 = (a - b*pi) / (a^2 - p*b^2)."""
        if not self.is_unit(x):
            raise ValueError("inverse of a non-unit")
        a, b = x
        if self.e == 1:
            return (pow(a, -1, self.pa), 0)
        ninv = pow(a * a - self.p * b * b, -1, self.pa)
        return ((a * ninv) % self.pa, (-b * ninv) % self.pb)

    def shift_up(self, x: Elem, s: int) -> Elem:
        """Multiply by pi^s."""
        if self.e == 1:
            return ((x[0] * self.p**s) % self.pa, 0)
        a, b = x
        for _ in range(s):
            a, b = (self.p * b) % self.pa, a % self.pb
        return (a, b)

    def shift_down(self, x: Elem, s: int) -> Elem:
        """Divide by pi^s; the canonical representative must be divisible.

        The top s pi-digits of the result are zero-filled.
        """
        a, b = x
        if self.e == 1:
            q = self.p**s
            if a % q:
                raise ValueError("not divisible by pi^s at this precision")
            return (a // q, 0)
        for _ in range(s):
            if a % self.p:
                raise ValueError("not divisible by pi^s at this precision")
            a, b = b, a // self.p
        return (a, b)

    def mod_pi(self, x: Elem) -> int:
        """Image in the residue field F_p."""
        return x[0] % self.p

    def truncate(self, other: "Ring", x: Elem) -> Elem:
        """Reduce an element of this ring into a lower-precision ring."""
        if (other.p, other.e) != (self.p, self.e) or other.M > self.M:
            raise ValueError("incompatible target ring")
        return (x[0] % other.pa, x[1] % other.pb)


# -- 3x3 matrices ------------------------------------------------------

Row = tuple[Elem, Elem, Elem]
Rows = tuple[Row, Row, Row]


@dataclass(frozen=True)
class ScaledMatrix:
    """A 3x3 matrix over K stored as pi^(-denom) * entries, entries over O.

    Normalized form: denom == 0, or some entry is a unit.  loss counts
    untrusted top pi-digits: entries are exact residues of the true
    values only below pi^(M - loss).  Every pi-division adds to it;
    comparisons ignore it.
    """

    rows: Rows
    denom: int = 0
    loss: int = field(default=0, compare=False)


def mat_from_ints(ring: Ring, rows, denom: int = 0) -> ScaledMatrix:
    ent = tuple(tuple(ring.from_int(v) for v in row) for row in rows)
    return ScaledMatrix(ent, denom)


def mat_identity(ring: Ring) -> ScaledMatrix:
    return mat_from_ints(ring, ((1, 0, 0), (0, 1, 0), (0, 0, 1)))


def mat_diag(ring: Ring, elems) -> ScaledMatrix:
    z = ring.zero()
    a, b, c = elems
    return ScaledMatrix(((a, z, z), (z, b, z), (z, z, c)))


def mat_elementary(ring: Ring, i: int, j: int, x: Elem) -> ScaledMatrix:
    if i == j:
        raise ValueError("off-diagonal position required")
    rows = [[ring.one() if r == c else ring.zero() for c in range(3)] for r in range(3)]
    rows[i][j] = x
    return ScaledMatrix(tuple(tuple(r) for r in rows))


def mat_min_val(ring: Ring, m: ScaledMatrix) -> int:
    return min(ring.val(x) for row in m.rows for x in row)


def mat_normalize(ring: Ring, m: ScaledMatrix) -> ScaledMatrix:
    """Divide out pi factors until denom == 0 or some entry is a unit."""
    if m.denom == 0:
        return m
    minv = mat_min_val(ring, m)
    if minv >= ring.M:
        raise PrecisionError("all entries vanish at working precision")
    t = min(m.denom, minv)
    if t == 0:
        return m
    ent = tuple(
        tuple(ring.shift_down(x, t) for x in row) for row in m.rows
    )
    return ScaledMatrix(ent, m.denom - t, m.loss + t)


def mat_mul(ring: Ring, a: ScaledMatrix, b: ScaledMatrix) -> ScaledMatrix:
    p, pa, pb = ring.p, ring.pa, ring.pb
    A, B = a.rows, b.rows
    out = []
    for i in range(3):
        Ai = A[i]
        row = []
        for j in range(3):
            sa = 0
            sb = 0
            for k in range(3):
                xa, xb = Ai[k]
                ya, yb = B[k][j]
                sa += xa * ya + p * xb * yb
                sb += xa * yb + xb * ya
            row.append((sa % pa, sb % pb))
        out.append(tuple(row))
    return mat_normalize(
        ring, ScaledMatrix(tuple(out), a.denom + b.denom, max(a.loss, b.loss))
    )


def mat_scale_entries(ring: Ring, m: ScaledMatrix, x: Elem) -> ScaledMatrix:
    ent = tuple(tuple(ring.mul(x, v) for v in row) for row in m.rows)
    return ScaledMatrix(ent, m.denom, m.loss)


def mat_scale_col(ring: Ring, m: ScaledMatrix, j: int, x: Elem) -> ScaledMatrix:
    ent = tuple(
        tuple(ring.mul(x, v) if c == j else v for c, v in enumerate(row))
        for row in m.rows
    )
    return ScaledMatrix(ent, m.denom, m.loss)


def mat_det_entries(ring: Ring, rows: Rows) -> Elem:
    (a, b, c), (d, e, f), (g, h, i) = rows
    m = ring.mul
    s = ring.sub
    t1 = m(a, s(m(e, i), m(f, h)))
    t2 = m(b, s(m(d, i), m(f, g)))
    t3 = m(c, s(m(d, h), m(e, g)))
    return ring.add(ring.sub(t1, t2), t3)


def mat_adj(ring: Ring, rows: Rows) -> Rows:
    (a, b, c), (d, e, f), (g, h, i) = rows
    m = ring.mul
    s = ring.sub
    return (
        (s(m(e, i), m(f, h)), s(m(c, h), m(b, i)), s(m(b, f), m(c, e))),
        (s(m(f, g), m(d, i)), s(m(a, i), m(c, g)), s(m(c, d), m(a, f))),
        (s(m(d, h), m(e, g)), s(m(b, g), m(a, h)), s(m(a, e), m(b, d))),
    )


def mat_inv(ring: Ring, a: ScaledMatrix) -> tuple[ScaledMatrix, int]:
    """Inverse via the adjugate.  Returns (inverse, precision_loss).

    precision_loss is the pi-valuation of the determinant of the entry
    part: that many top digits of the result are untrusted.
    """
    det = mat_det_entries(ring, a.rows)
    s = ring.val(det)
    if s >= ring.M - a.loss:
        raise PrecisionError("determinant vanishes at working precision")
    u = ring.shift_down(det, s)
    uinv = ring.inv(u)
    adj = mat_adj(ring, a.rows)
    ent = tuple(tuple(ring.mul(uinv, x) for x in row) for row in adj)
    net = s - a.denom
    if net >= 0:
        out = ScaledMatrix(ent, net, a.loss)
    else:
        ent = tuple(tuple(ring.shift_up(x, -net) for x in row) for row in ent)
        out = ScaledMatrix(ent, 0, a.loss)
    return mat_normalize(ring, out), s


def mat_eq(ring: Ring, a: ScaledMatrix, b: ScaledMatrix) -> bool:
    a = mat_normalize(ring, a)
    b = mat_normalize(ring, b)
    if a.denom != b.denom:
        return False
    if a.loss == 0 and b.loss == 0:
        return a.rows == b.rows
    eff = ring.M - max(a.loss, b.loss)
    return all(
        ring.val(ring.sub(x, y)) >= eff
        for ra, rb in zip(a.rows, b.rows)
        for x, y in zip(ra, rb)
    )


def mat_is_sl3o(ring: Ring, a: ScaledMatrix) -> bool:
    """Entries in O and determinant exactly 1 at working precision."""
    a = mat_normalize(ring, a)
    if a.denom != 0:
        return False
    gap = ring.sub(mat_det_entries(ring, a.rows), ring.one())
    return ring.val(gap) >= ring.M - a.loss


def mat_mod_pi(ring: Ring, a: ScaledMatrix):
    """Reduction mod pi as a 3x3 matrix over F_p; requires denom == 0."""
    if a.denom != 0:
        raise ValueError("matrix has a pi-denominator")
    return tuple(tuple(x[0] % ring.p for x in row) for row in a.rows)


def mat_truncate(big: Ring, small: Ring, a: ScaledMatrix) -> ScaledMatrix:
    ent = tuple(tuple(big.truncate(small, x) for x in row) for row in a.rows)
    return ScaledMatrix(ent, a.denom, max(0, a.loss - (big.M - small.M)))
