"""Concrete quantum spaces: operator spaces with the amplified (spatial) norm.

An element of the amplification ``KE`` is stored as one coefficient matrix per
basis element of ``E``. Coefficients are allowed to be rectangular
(``B(C^c, C^r)`` sits in the corner of ``M_N`` for any ``N >= r, c``, and the
norm does not see the padding); the usual case is square, at a *level* ``m``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .matrix_core import (
    as_cmatrix,
    corner_pad,
    make_partial_isometries,
    matrix_from_json,
    matrix_to_json,
    op_norm,
    random_cmatrix,
)

KINDS = ("generic", "column", "row", "conjugate_row", "conjugate_column",
         "spatial_product", "finite_rank")

# equalities in the Ruan checks are relative to the larger norm
RUAN_EQ_TOL = 1e-10
RUAN_INEQ_SLACK = 1e-12


class SupportError(ValueError):
    """A support precondition of a Ruan check does not hold."""


@dataclass(frozen=True, eq=False)
class OperatorSpace:
    """A concrete operator space ``E`` in ``B(C^h, C^k)`` with a fixed basis."""

    in_dim: int
    out_dim: int
    basis: tuple
    kind: str = "generic"
    factors: tuple | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r}")
        basis = tuple(as_cmatrix(x) for x in self.basis)
        if not basis:
            raise ValueError("basis must be nonempty")
        for x in basis:
            if x.shape != (self.out_dim, self.in_dim):
                raise ValueError(
                    f"basis element of shape {x.shape}, expected "
                    f"{(self.out_dim, self.in_dim)}")
        stacked = np.array([x.ravel() for x in basis])
        if np.linalg.matrix_rank(stacked) < len(basis):
            raise ValueError("basis is linearly dependent")
        if self.kind in ("column", "conjugate_column") and self.in_dim != 1:
            raise ValueError("column spaces act on C")
        if self.kind in ("row", "conjugate_row") and self.out_dim != 1:
            raise ValueError("row spaces map into C")
        for x in basis:
            x.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def basis_array(self) -> np.ndarray:
        return np.array(self.basis)

    def vector(self, x) -> np.ndarray:
        """The operator ``sum_i x_i basis_i``."""
        x = np.asarray(x, dtype=complex).ravel()
        if x.size != self.dim:
            raise ValueError(f"expected {self.dim} coordinates, got {x.size}")
        return np.tensordot(x, self.basis_array, axes=1)

    def to_json(self) -> dict:
        out = {
            "kind": self.kind,
            "in_dim": self.in_dim,
            "out_dim": self.out_dim,
            "basis": [matrix_to_json(x) for x in self.basis],
        }
        if self.factors is not None:
            out["factors"] = [f.to_json() for f in self.factors]
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "OperatorSpace":
        factors = obj.get("factors")
        if factors is not None:
            factors = tuple(cls.from_json(f) for f in factors)
        return cls(int(obj["in_dim"]), int(obj["out_dim"]),
                   tuple(matrix_from_json(x) for x in obj["basis"]),
                   obj.get("kind", "generic"), factors)


@dataclass(frozen=True, eq=False)
class AmplifiedElement:
    """``u = sum_i coeffs[i] (x) basis_i`` in ``KE``."""

    space: OperatorSpace
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 3 or c.shape[0] != self.space.dim:
            raise ValueError(
                f"coefficients of shape {c.shape} do not match a space of "
                f"dimension {self.space.dim}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def shape(self) -> tuple[int, int]:
        return self.coeffs.shape[1], self.coeffs.shape[2]

    @property
    def level(self) -> int:
        r, c = self.shape
        if r != c:
            raise ValueError(f"element with {r}x{c} coefficients has no level")
        return r

    def assemble(self) -> np.ndarray:
        """The operator ``sum_i kron(coeffs_i, basis_i)`` on ``C^c (x) C^h``."""
        c = self.coeffs
        B = self.space.basis_array
        r, cc = self.shape
        k, h = self.space.out_dim, self.space.in_dim
        out = np.einsum("iab,ipq->apbq", c, B, optimize=True)
        return out.reshape(r * k, cc * h)

    def norm(self) -> float:
        return amplified_norm(self)

    def __add__(self, other: "AmplifiedElement") -> "AmplifiedElement":
        _check_same_space(self, other)
        return AmplifiedElement(self.space, self.coeffs + other.coeffs)

    def __sub__(self, other: "AmplifiedElement") -> "AmplifiedElement":
        _check_same_space(self, other)
        return AmplifiedElement(self.space, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "AmplifiedElement":
        return AmplifiedElement(self.space, self.coeffs * scalar)

    __rmul__ = __mul__

    def to_json(self, inline_space: bool = True) -> dict:
        out = {"coeffs": [matrix_to_json(c) for c in self.coeffs]}
        r, c = self.shape
        out["level"] = r if r == c else [r, c]
        out["space"] = self.space.to_json() if inline_space else "ref"
        return out

    @classmethod
    def from_json(cls, obj: dict, space: OperatorSpace | None = None) -> "AmplifiedElement":
        if space is None:
            space = OperatorSpace.from_json(obj["space"])
        coeffs = np.array([matrix_from_json(c) for c in obj["coeffs"]])
        return cls(space, coeffs)


def _check_same_space(u: AmplifiedElement, v: AmplifiedElement):
    if u.space is not v.space:
        raise ValueError("elements live over different spaces")
    if u.shape != v.shape:
        raise ValueError(f"coefficient shapes differ: {u.shape} vs {v.shape}")


def element(space: OperatorSpace, coeffs) -> AmplifiedElement:
    return AmplifiedElement(space, np.asarray(coeffs, dtype=complex))


def zero_element(space: OperatorSpace, rows: int, cols: int | None = None) -> AmplifiedElement:
    cols = rows if cols is None else cols
    return AmplifiedElement(space, np.zeros((space.dim, rows, cols), dtype=complex))


def elementary(space: OperatorSpace, a, x) -> AmplifiedElement:
    """The elementary tensor ``a x`` with ``x`` given by basis coordinates."""
    a = as_cmatrix(a)
    x = np.asarray(x, dtype=complex).ravel()
    return AmplifiedElement(space, x[:, None, None] * a[None])


def random_element(space: OperatorSpace, rng: np.random.Generator,
                   rows: int, cols: int | None = None) -> AmplifiedElement:
    cols = rows if cols is None else cols
    c = np.array([random_cmatrix(rng, rows, cols) for _ in range(space.dim)])
    return AmplifiedElement(space, c)


def amplified_norm(u: AmplifiedElement) -> float:
    return op_norm(u.assemble())


def underlying_norm(space: OperatorSpace, x, p=None) -> float:
    """``||x|| = ||p x||`` for a rank-1 projection ``p`` (default ``[1]``)."""
    x = np.asarray(x, dtype=complex).ravel()
    if p is None:
        p = np.ones((1, 1), dtype=complex)
    return amplified_norm(elementary(space, p, x))


def module_action(a, u: AmplifiedElement, b=None) -> AmplifiedElement:
    """``a . u . b``, coefficientwise; either side may be ``None`` (identity)."""
    c = u.coeffs
    if a is not None:
        a = as_cmatrix(a)
        if a.shape[1] != c.shape[1]:
            raise ValueError(f"left factor {a.shape} does not match {u.shape}")
        c = np.einsum("ab,ibc->iac", a, c)
    if b is not None:
        b = as_cmatrix(b)
        if b.shape[0] != c.shape[2]:
            raise ValueError(f"right factor {b.shape} does not match {u.shape}")
        c = np.einsum("iab,bc->iac", c, b)
    return AmplifiedElement(u.space, c)


def _is_projection(P, tol=1e-12) -> bool:
    return np.allclose(P, P.conj().T, atol=tol) and np.allclose(P @ P, P, atol=tol)


@dataclass
class RuanReport:
    norm_u: float
    norm_v: float
    norm_sum: float
    expected: float
    ok: bool


def check_ruan_rii(u: AmplifiedElement, v: AmplifiedElement, P, Q,
                   tol: float = RUAN_EQ_TOL) -> RuanReport:
    """Check ``||u + v|| = max(||u||, ||v||)`` for orthogonally supported ``u, v``."""
    P, Q = as_cmatrix(P), as_cmatrix(Q)
    if u.shape != v.shape:
        raise SupportError(f"coefficient shapes differ: {u.shape} vs {v.shape}")
    if not (_is_projection(P) and _is_projection(Q)):
        raise SupportError("P and Q must be orthogonal projections")
    if not np.allclose(P @ Q, 0, atol=1e-12):
        raise SupportError("supports are not orthogonal: PQ != 0")
    if not np.allclose(module_action(P, u, P).coeffs, u.coeffs, atol=1e-12):
        raise SupportError("P is not a support of u: PuP != u")
    if not np.allclose(module_action(Q, v, Q).coeffs, v.coeffs, atol=1e-12):
        raise SupportError("Q is not a support of v: QvQ != v")
    nu, nv, ns = amplified_norm(u), amplified_norm(v), amplified_norm(u + v)
    expected = max(nu, nv)
    return RuanReport(nu, nv, ns, expected, abs(ns - expected) <= tol * max(expected, 1e-300))


def check_ruan_ri(a, u: AmplifiedElement, b, slack: float = RUAN_INEQ_SLACK) -> bool:
    lhs = amplified_norm(module_action(a, u, b))
    return lhs <= op_norm(a) * amplified_norm(u) * op_norm(b) + slack


def make_column_hilbertian(h: int) -> OperatorSpace:
    """``H_c``: ``x`` is the operator ``1 -> x`` in ``B(C, C^h)``."""
    eye = np.eye(h, dtype=complex)
    return OperatorSpace(1, h, tuple(eye[:, [k]] for k in range(h)), "column")


def make_row_hilbertian(h: int) -> OperatorSpace:
    """``H_r``: ``x`` is the functional ``y -> <x, y>``, written on conjugated
    coordinates of ``y`` so it is the plain row ``x^T``."""
    eye = np.eye(h, dtype=complex)
    return OperatorSpace(h, 1, tuple(eye[[k], :] for k in range(h)), "row")


def make_conjugate_row(h: int) -> OperatorSpace:
    eye = np.eye(h, dtype=complex)
    return OperatorSpace(h, 1, tuple(eye[[k], :] for k in range(h)), "conjugate_row")


def make_conjugate_column(h: int) -> OperatorSpace:
    eye = np.eye(h, dtype=complex)
    return OperatorSpace(1, h, tuple(eye[:, [k]] for k in range(h)), "conjugate_column")


def make_matrix_space(k: int, h: int | None = None) -> OperatorSpace:
    """All of ``B(C^h, C^k)`` with matrix units ``E_ij`` (row-major order)."""
    h = k if h is None else h
    basis = []
    for i in range(k):
        for j in range(h):
            E = np.zeros((k, h), dtype=complex)
            E[i, j] = 1.0
            basis.append(E)
    return OperatorSpace(h, k, tuple(basis), "finite_rank")


def make_scalar_space() -> OperatorSpace:
    return OperatorSpace(1, 1, (np.ones((1, 1)),), "generic")


def random_operator_space(rng: np.random.Generator, dim: int, out_dim: int,
                          in_dim: int) -> OperatorSpace:
    basis = tuple(random_cmatrix(rng, out_dim, in_dim) for _ in range(dim))
    return OperatorSpace(in_dim, out_dim, basis, "generic")


def _hilbert_index_check(H: OperatorSpace, n: int):
    if H.kind not in ("column", "row", "conjugate_row", "conjugate_column"):
        raise ValueError(f"expected a Hilbertian, got kind {H.kind!r}")
    if H.dim < n:
        raise ValueError(f"Hilbertian of dimension {H.dim} < n={n}")


def make_omega(n: int, m: int, H: OperatorSpace) -> AmplifiedElement:
    """``omega = sum_k q_k^* e_k`` at level ``m``."""
    _hilbert_index_check(H, n)
    qs, _ = make_partial_isometries(n, m)
    c = np.zeros((H.dim, m, m), dtype=complex)
    for k, q in enumerate(qs):
        c[k] = q.conj().T
    return AmplifiedElement(H, c)


def make_varpi(n: int, m: int, H: OperatorSpace) -> AmplifiedElement:
    """``varpi = sum_k q_k e_k`` at level ``m``."""
    _hilbert_index_check(H, n)
    qs, _ = make_partial_isometries(n, m)
    c = np.zeros((H.dim, m, m), dtype=complex)
    for k, q in enumerate(qs):
        c[k] = q
    return AmplifiedElement(H, c)


def corner_embed(u: AmplifiedElement, level: int, cols: int | None = None) -> AmplifiedElement:
    """Zero-pad every coefficient into the top-left corner (norm preserving)."""
    cols = level if cols is None else cols
    r, c = u.shape
    if level < r or cols < c:
        raise ValueError(f"cannot embed {u.shape} coefficients at {(level, cols)}")
    return AmplifiedElement(u.space, np.array([corner_pad(x, level, cols) for x in u.coeffs]))


def amplify_map(phi, u: AmplifiedElement, target: OperatorSpace) -> AmplifiedElement:
    """``phi_inf(u)`` for ``phi`` given as a ``target.dim x u.space.dim`` matrix."""
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != (target.dim, u.space.dim):
        raise ValueError(
            f"map matrix {phi.shape} does not match {target.dim}x{u.space.dim}")
    return AmplifiedElement(target, np.tensordot(phi, u.coeffs, axes=1))


@dataclass
class Estimate:
    """Certified lower bound: every entry of ``history`` is a genuine ratio."""

    value: float
    level: int
    witness: tuple
    history: np.ndarray = field(repr=False)

    @property
    def samples(self) -> int:
        return int(self.history.size)

    @property
    def max_sampled(self) -> float:
        return float(self.history.max()) if self.history.size else 0.0


def hill_climb(objective, start, rng: np.random.Generator, iterations: int,
               step: float = 0.5, min_step: float = 1e-6):
    """Random-direction hill climbing on a scale-invariant objective.

    ``start`` is a list of complex arrays; a failed step halves the step size.
    Returns ``(best_value, best_point, history)``.
    """
    x = [np.array(s, dtype=complex) for s in start]
    fx = objective(x)
    history = [fx]
    for _ in range(iterations):
        if step < min_step:
            break
        y = []
        for s in x:
            g = rng.standard_normal(s.shape) + 1j * rng.standard_normal(s.shape)
            scale = np.linalg.norm(s) or 1.0
            y.append(s + step * scale * g / np.linalg.norm(g))
        fy = objective(y)
        history.append(fy)
        if fy > fx:
            x, fx = y, fy
        else:
            step *= 0.5
    return fx, x, history


def restart_rngs(seed, restarts: int) -> list[np.random.Generator]:
    """One independent generator per restart, derived from ``(seed, index)``."""
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(restarts)]


def cb_norm_estimate(phi, source: OperatorSpace, target: OperatorSpace, level: int,
                     restarts: int = 32, iterations: int = 200, seed=0,
                     witnesses=()) -> Estimate:
    """Lower bound for ``||phi||_cb`` from the amplification at ``level``.

    Candidates are random-restart hill-climbing iterates on the coefficient
    matrices plus any injected ``witnesses`` (elements of ``K source``; ones
    at a smaller level are corner-embedded).
    """
    phi = np.asarray(phi, dtype=complex)
    if phi.shape != (target.dim, source.dim):
        raise ValueError(
            f"map matrix {phi.shape} does not match {target.dim}x{source.dim}")

    def ratio(c):
        u = AmplifiedElement(source, c[0])
        nu = amplified_norm(u)
        if nu == 0.0:
            return 0.0
        return amplified_norm(amplify_map(phi, u, target)) / nu

    best, best_c, history = -1.0, None, []
    for w in witnesses:
        if w.space is not source:
            raise ValueError("witness lives over a different space")
        if w.shape != (level, level):
            w = corner_embed(w, level)
        val = ratio([w.coeffs])
        history.append(val)
        if val > best:
            best, best_c = val, w.coeffs
    for rng in restart_rngs(seed, restarts):
        start = [random_element(source, rng, level).coeffs]
        val, c, hist = hill_climb(ratio, start, rng, iterations)
        history.extend(hist)
        if val > best:
            best, best_c = val, c[0]
    if best_c is None:
        raise ValueError("no candidates: give restarts >= 1 or a witness")
    u = AmplifiedElement(source, best_c)
    u = u * (1.0 / (amplified_norm(u) or 1.0))
    return Estimate(best, level, (u,), np.array(history))


def functional_norm(space: OperatorSpace, f, iterations: int = 50) -> float:
    """Upper bound for the norm of ``x -> sum_i f_i x_i`` on the underlying space.

    Any ``T`` with ``tr(T basis_i) = f_i`` represents the functional, and its
    trace norm bounds ``||f||``. The bound is exact when the basis spans the
    full matrix space (Hilbertians, ``M_n``); otherwise the trace norm is
    reduced by projected subgradient steps over the affine family.
    """
    f = np.asarray(f, dtype=complex).ravel()
    B = space.basis_array
    k, h = space.out_dim, space.in_dim
    # tr(T X) = sum_{ab} T_ba X_ab = vec(T^T) . vec(X)
    A = B.reshape(space.dim, k * h)
    t, *_ = np.linalg.lstsq(A, f, rcond=None)
    null = _null_space(A)

    def nuc(vec):
        return float(np.linalg.svd(vec.reshape(k, h), compute_uv=False).sum())

    best = nuc(t)
    if null.shape[1] and iterations:
        x = t.copy()
        for it in range(iterations):
            U, _, Vh = np.linalg.svd(x.reshape(k, h), full_matrices=False)
            g = (U @ Vh).ravel()
            d = null @ (null.conj().T @ g)
            nd = np.linalg.norm(d)
            if nd < 1e-14:
                break
            x = x - (best / (it + 1)) * 0.5 * d / nd
            best = min(best, nuc(x))
    return best


def _null_space(A, tol=1e-12) -> np.ndarray:
    _, s, Vh = np.linalg.svd(A)
    rank = int((s > tol * (s[0] if s.size else 1)).sum())
    return Vh[rank:].conj().T


@lru_cache(maxsize=256)
def spatial_product(E: OperatorSpace, F: OperatorSpace) -> OperatorSpace:
    """``E (x) F`` inside ``B(C^{h1 h2}, C^{k1 k2})``; basis ``x_i (x) y_j`` at
    index ``i * F.dim + j``."""
    basis = tuple(np.kron(x, y) for x in E.basis for y in F.basis)
    return OperatorSpace(E.in_dim * F.in_dim, E.out_dim * F.out_dim, basis,
                         "spatial_product", (E, F))
