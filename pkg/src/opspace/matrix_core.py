"""Dense complex linear algebra and finite models of the Hilbert-space devices.

Matrices are plain complex numpy arrays. The separable space ``L`` is modelled
by ``C^m`` at a per-computation level, and the identification ``L = L (x) L``
by a *graded* pairing: a pair of sizes ``(r1, r2)`` gets a fixed permutation
``C^{r1 r2} -> C^{r1} (x) C^{r2}``, so that ``a <> b`` maps ``M_{r1 x c1}`` and
``M_{r2 x c2}`` into ``M_{r1 r2 x c1 c2}``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np

# singular values below this fraction of the largest are treated as zero
SVD_CUTOFF = 1e-13


def as_cmatrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got array of shape {M.shape}")
    return M


def op_norm(M) -> float:
    """Largest singular value (the induced operator norm)."""
    M = np.asarray(M)
    if M.size == 0:
        return 0.0
    return float(np.linalg.norm(M, 2))


def inner(x, y) -> complex:
    """Inner product, linear in ``x`` and conjugate-linear in ``y``."""
    return complex(np.vdot(y, x))


def rank_one(xi, eta) -> np.ndarray:
    """The operator ``zeta -> <zeta, eta> xi``."""
    xi = np.asarray(xi, dtype=complex).ravel()
    eta = np.asarray(eta, dtype=complex).ravel()
    if xi.shape != eta.shape:
        raise ValueError(f"dimension mismatch: {xi.size} vs {eta.size}")
    return np.outer(xi, eta.conj())


def kron(A, B) -> np.ndarray:
    return np.kron(np.asarray(A, dtype=complex), np.asarray(B, dtype=complex))


@lru_cache(maxsize=None)
def _pairing(r1: int, r2: int) -> np.ndarray:
    # column-major: index p = i + j*r1 is paired with (i, j), whose Kronecker
    # position is i*r2 + j
    p = np.arange(r1 * r2)
    i, j = p % r1, p // r1
    perm = i * r2 + j
    perm.setflags(write=False)
    return perm


def pairing(r1: int, r2: int) -> np.ndarray:
    """Permutation ``iota`` with ``iota[p]`` the Kronecker index paired with ``p``."""
    return _pairing(int(r1), int(r2))


def pairing_matrix(r1: int, r2: int) -> np.ndarray:
    """The unitary ``iota : C^{r1 r2} -> C^{r1} (x) C^{r2}`` as a permutation matrix."""
    perm = pairing(r1, r2)
    n = r1 * r2
    P = np.zeros((n, n), dtype=complex)
    P[perm, np.arange(n)] = 1.0
    return P


@dataclass(frozen=True)
class DiamondContext:
    """Pairing data at a fixed base level ``m`` (square case)."""

    base_level: int
    iota: np.ndarray = field(init=False, repr=False, compare=False)
    delta: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        m = int(self.base_level)
        if m < 1:
            raise ValueError("base_level must be positive")
        iota = pairing(m, m)
        # flip on C^m (x) C^m, then pulled back along iota
        idx = np.arange(m * m)
        flip = np.zeros((m * m, m * m), dtype=complex)
        flip[(idx % m) * m + idx // m, idx] = 1.0
        delta = flip[np.ix_(iota, iota)]
        delta.setflags(write=False)
        object.__setattr__(self, "iota", iota)
        object.__setattr__(self, "delta", delta)


def diamond(a, b, ctx: DiamondContext | None = None) -> np.ndarray:
    """``a <> b = iota^* (a (x) b) iota`` with the graded pairing.

    With a context both factors must be square of size ``ctx.base_level``;
    without one, any shapes are accepted and the pairing is chosen per shape.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if ctx is not None:
        m = ctx.base_level
        if a.shape != (m, m) or b.shape != (m, m):
            raise ValueError(
                f"diamond expects {m}x{m} factors, got {a.shape} and {b.shape}")
    rows = pairing(a.shape[0], b.shape[0])
    cols = pairing(a.shape[1], b.shape[1])
    return np.kron(a, b)[np.ix_(rows, cols)]


def delta_conjugate(M, ctx: DiamondContext) -> np.ndarray:
    M = np.asarray(M, dtype=complex)
    n = ctx.base_level ** 2
    if M.shape != (n, n):
        raise ValueError(f"expected a {n}x{n} matrix, got {M.shape}")
    return ctx.delta @ M @ ctx.delta


def make_partial_isometries(n: int, m: int):
    """Partial isometries ``q_1..q_n`` in ``M_m`` with common rank-1 initial
    projection ``P = e_1 o e_1`` and final projections ``e_k o e_k``.

    Returns ``(qs, P)``.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if m < n:
        raise ValueError(f"level m={m} is too small for {n} partial isometries")
    eye = np.eye(m, dtype=complex)
    qs = [rank_one(eye[k], eye[0]) for k in range(n)]
    return qs, rank_one(eye[0], eye[0])


def block_isometries(sizes) -> list[np.ndarray]:
    """Isometries ``S_k : C^{s_k} -> C^{sum s}`` onto consecutive coordinate blocks."""
    sizes = [int(s) for s in sizes]
    total = sum(sizes)
    out, start = [], 0
    for s in sizes:
        S = np.zeros((total, s), dtype=complex)
        S[start:start + s, :] = np.eye(s)
        out.append(S)
        start += s
    return out


def make_corner_isometries(n: int, m: int) -> list[np.ndarray]:
    """``n`` isometries ``C^m -> C^{nm}`` with pairwise orthogonal images."""
    return block_isometries([m] * n)


def corner_pad(M, rows: int, cols: int) -> np.ndarray:
    """Zero-pad ``M`` into the top-left corner of a ``rows x cols`` matrix."""
    M = np.asarray(M, dtype=complex)
    if rows < M.shape[0] or cols < M.shape[1]:
        raise ValueError(f"cannot embed {M.shape} into {(rows, cols)}")
    out = np.zeros((rows, cols), dtype=complex)
    out[:M.shape[0], :M.shape[1]] = M
    return out


class DiamondSquareFactors(NamedTuple):
    b: np.ndarray
    c: np.ndarray
    b_prime: np.ndarray


def diamond_square_factor(a, ctx: DiamondContext) -> DiamondSquareFactors:
    """Factor an ``m^2 x m^2`` matrix as ``b (c <> c) b'`` with ``c`` in ``M_m``.

    Singular value decomposition ``a = I h J`` with ``h`` read as diagonal in
    the paired basis ``e_{i,j}``; a decreasing majorant ``t`` of the singular
    values gives ``c = diag(sqrt(t))`` whose diamond square dominates ``h``,
    and the leftover diagonal ``f`` is absorbed into ``b = I f``, ``b' = f J``.
    """
    m = ctx.base_level
    a = np.asarray(a, dtype=complex)
    if a.shape != (m * m, m * m):
        raise ValueError(f"expected a {m*m}x{m*m} matrix, got {a.shape}")
    I, lam, J = np.linalg.svd(a)
    top = lam[0] if lam.size else 0.0
    lam = np.where(lam > SVD_CUTOFF * top, lam, 0.0)
    if top == 0.0 or not lam.any():
        z = np.zeros((m * m, m * m), dtype=complex)
        return DiamondSquareFactors(z, np.zeros((m, m), dtype=complex), z.copy())

    # lam[p] sits at the paired index (i, j) of p; t_n bounds every
    # lambda_{i,j} with max(i, j) >= n, so it is decreasing and dominates
    # both lambda_{i,n} and lambda_{n,i}
    p = np.arange(m * m)
    i, j = p % m, p // m
    hi = np.maximum(i, j)
    t = np.array([lam[hi >= n].max() for n in range(m)])
    r = np.sqrt(t[i] * t[j])
    s = np.zeros_like(lam)
    nz = r > 0
    s[nz] = np.sqrt(lam[nz] / r[nz])
    f = np.diag(s).astype(complex)
    c = np.diag(np.sqrt(t)).astype(complex)
    return DiamondSquareFactors(I @ f, c, f @ J)


def random_cmatrix(rng: np.random.Generator, rows: int, cols: int | None = None) -> np.ndarray:
    """Matrix with independent standard complex Gaussian entries."""
    cols = rows if cols is None else cols
    return (rng.standard_normal((rows, cols))
            + 1j * rng.standard_normal((rows, cols))) / np.sqrt(2)


def matrix_to_json(M) -> dict:
    M = np.asarray(M, dtype=complex)
    return {
        "rows": int(M.shape[0]),
        "cols": int(M.shape[1]),
        "re": [float(x) for x in M.real.ravel()],
        "im": [float(x) for x in M.imag.ravel()],
    }


def matrix_from_json(obj: dict) -> np.ndarray:
    rows, cols = int(obj["rows"]), int(obj["cols"])
    re = np.asarray(obj["re"], dtype=float)
    im = np.asarray(obj.get("im", np.zeros(rows * cols)), dtype=float)
    if re.size != rows * cols or im.size != rows * cols:
        raise ValueError(f"entry count does not match {rows}x{cols}")
    return (re + 1j * im).reshape(rows, cols)
