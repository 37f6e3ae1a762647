"""Bilinear operators between concrete quantum spaces and their amplifications.

A bioperator ``R : E x F -> G`` is stored as its structure tensor
``c[i, j, k]`` with ``R(x_i, y_j) = sum_k c[i, j, k] z_k``. The strong
amplification keeps the coefficient shape (``(ax, by) -> ab R(x, y)``); the
weak one goes through the diamond pairing (``(ax, by) -> (a <> b) R(x, y)``)
and so lands at level ``m^2``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matrix_core import DiamondContext, as_cmatrix, diamond, pairing
from .quantum_space import (
    AmplifiedElement,
    Estimate,
    OperatorSpace,
    amplified_norm,
    corner_embed,
    hill_climb,
    make_scalar_space,
    module_action,
    random_element,
    restart_rngs,
    spatial_product,
)


@dataclass(frozen=True, eq=False)
class Bioperator:
    dom_E: OperatorSpace
    dom_F: OperatorSpace
    cod_G: OperatorSpace
    structure: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.asarray(self.structure, dtype=complex)
        expected = (self.dom_E.dim, self.dom_F.dim, self.cod_G.dim)
        if c.shape != expected:
            raise ValueError(f"structure tensor {c.shape} does not match {expected}")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "structure", c)

    def __call__(self, x, y) -> np.ndarray:
        """``R(x, y)`` in ``G``-coordinates, for ``x, y`` in basis coordinates."""
        return np.einsum("ijk,i,j->k", self.structure, np.asarray(x, dtype=complex),
                         np.asarray(y, dtype=complex))

    def to_json(self) -> dict:
        c = self.structure
        return {
            "dom_E": self.dom_E.to_json(),
            "dom_F": self.dom_F.to_json(),
            "cod_G": self.cod_G.to_json(),
            "structure": [[[[float(z.real), float(z.imag)] for z in row] for row in plane]
                          for plane in c],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Bioperator":
        c = np.asarray(obj["structure"], dtype=float)
        return cls(OperatorSpace.from_json(obj["dom_E"]),
                   OperatorSpace.from_json(obj["dom_F"]),
                   OperatorSpace.from_json(obj["cod_G"]),
                   c[..., 0] + 1j * c[..., 1])


def _check_domains(R: Bioperator, u: AmplifiedElement, v: AmplifiedElement):
    if u.space is not R.dom_E:
        raise ValueError("first argument does not live over the first domain")
    if v.space is not R.dom_F:
        raise ValueError("second argument does not live over the second domain")


def strong_amplify(R: Bioperator, u: AmplifiedElement, v: AmplifiedElement) -> AmplifiedElement:
    _check_domains(R, u, v)
    if u.shape[1] != v.shape[0]:
        raise ValueError(f"coefficient shapes {u.shape} and {v.shape} do not compose")
    out = np.einsum("ijk,iab,jbc->kac", R.structure, u.coeffs, v.coeffs, optimize=True)
    return AmplifiedElement(R.cod_G, out)


def _diamond_sum(c: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # sum_ij c[i,j,k] (A_i <> B_j) for every k, through one Kronecker assembly
    _, r1, c1 = A.shape
    _, r2, c2 = B.shape
    K = np.einsum("ijk,iab,jcd->kacbd", c, A, B, optimize=True)
    K = K.reshape(c.shape[2], r1 * r2, c1 * c2)
    return K[:, pairing(r1, r2)][:, :, pairing(c1, c2)]


def weak_amplify(R: Bioperator, u: AmplifiedElement, v: AmplifiedElement,
                 ctx: DiamondContext | None = None) -> AmplifiedElement:
    _check_domains(R, u, v)
    if ctx is not None and (u.shape != (ctx.base_level,) * 2 or v.shape != u.shape):
        raise ValueError(f"arguments must be at level {ctx.base_level}")
    return AmplifiedElement(R.cod_G, _diamond_sum(R.structure, u.coeffs, v.coeffs))


def diamond_act_left(a, u: AmplifiedElement, ctx: DiamondContext | None = None) -> AmplifiedElement:
    """``a <> u``, fixed by ``a <> bx = (a <> b)x``."""
    a = as_cmatrix(a)
    if ctx is not None and (a.shape != (ctx.base_level,) * 2 or u.shape != a.shape):
        raise ValueError(f"arguments must be at level {ctx.base_level}")
    return AmplifiedElement(u.space, np.array([diamond(a, c) for c in u.coeffs]))


def diamond_act_right(u: AmplifiedElement, a, ctx: DiamondContext | None = None) -> AmplifiedElement:
    """``u <> a``, fixed by ``bx <> a = (b <> a)x``."""
    a = as_cmatrix(a)
    if ctx is not None and (a.shape != (ctx.base_level,) * 2 or u.shape != a.shape):
        raise ValueError(f"arguments must be at level {ctx.base_level}")
    return AmplifiedElement(u.space, np.array([diamond(c, a) for c in u.coeffs]))


def opposite(R: Bioperator) -> Bioperator:
    """``R^op(y, x) = R(x, y)``."""
    return Bioperator(R.dom_F, R.dom_E, R.cod_G, R.structure.transpose(1, 0, 2))


def inner_product_bifunctional(H: OperatorSpace, H_bar: OperatorSpace) -> Bioperator:
    """``<., .> : H x H_bar -> C``; conjugate bases pair to ``delta_ij``."""
    if H.dim != H_bar.dim:
        raise ValueError("H and its conjugate must have the same dimension")
    c = np.zeros((H.dim, H.dim, 1), dtype=complex)
    c[np.arange(H.dim), np.arange(H.dim), 0] = 1.0
    return Bioperator(H, H_bar, make_scalar_space(), c)


def bifunctional(E: OperatorSpace, F: OperatorSpace, matrix) -> Bioperator:
    """``(x, y) -> sum_ij M_ij x_i y_j`` into ``C``."""
    M = np.asarray(matrix, dtype=complex)
    if M.shape != (E.dim, F.dim):
        raise ValueError(f"matrix {M.shape} does not match {(E.dim, F.dim)}")
    return Bioperator(E, F, make_scalar_space(), M[:, :, None])


def product_bifunctional(f, g, E: OperatorSpace, F: OperatorSpace) -> Bioperator:
    """``f x g : (x, y) -> f(x) g(y)``."""
    return bifunctional(E, F, np.outer(np.asarray(f, dtype=complex),
                                       np.asarray(g, dtype=complex)))


def canonical_bioperator(E: OperatorSpace, F: OperatorSpace,
                         G: OperatorSpace | None = None) -> Bioperator:
    """``(x, y) -> x (x) y`` into the spatial product (or a supplied ``G``
    whose basis is indexed the same way)."""
    G = spatial_product(E, F) if G is None else G
    c = np.zeros((E.dim, F.dim, E.dim * F.dim), dtype=complex)
    i, j = np.meshgrid(np.arange(E.dim), np.arange(F.dim), indexing="ij")
    c[i, j, i * F.dim + j] = 1.0
    return Bioperator(E, F, G, c)


def _bilinear_estimate(amplify, R: Bioperator, level: int, restarts: int,
                       iterations: int, seed, witnesses) -> Estimate:
    def ratio(cs):
        u = AmplifiedElement(R.dom_E, cs[0])
        v = AmplifiedElement(R.dom_F, cs[1])
        den = amplified_norm(u) * amplified_norm(v)
        if den == 0.0:
            return 0.0
        return amplified_norm(amplify(R, u, v)) / den

    best, best_pair, history = -1.0, None, []
    for u, v in witnesses:
        if u.shape != (level, level):
            u = corner_embed(u, level)
        if v.shape != (level, level):
            v = corner_embed(v, level)
        val = ratio([u.coeffs, v.coeffs])
        history.append(val)
        if val > best:
            best, best_pair = val, (u.coeffs, v.coeffs)
    for rng in restart_rngs(seed, restarts):
        start = [random_element(R.dom_E, rng, level).coeffs,
                 random_element(R.dom_F, rng, level).coeffs]
        val, cs, hist = hill_climb(ratio, start, rng, iterations)
        history.extend(hist)
        if val > best:
            best, best_pair = val, (cs[0], cs[1])
    if best_pair is None:
        raise ValueError("no candidates: give restarts >= 1 or a witness")
    u = AmplifiedElement(R.dom_E, best_pair[0])
    v = AmplifiedElement(R.dom_F, best_pair[1])
    u = u * (1.0 / (amplified_norm(u) or 1.0))
    v = v * (1.0 / (amplified_norm(v) or 1.0))
    return Estimate(best, level, (u, v), np.array(history))


def estimate_scb(R: Bioperator, level: int, restarts: int = 32, iterations: int = 200,
                 seed=0, witnesses=()) -> Estimate:
    """Lower bound for ``||R||_scb`` from unit pairs at ``level``."""
    return _bilinear_estimate(strong_amplify, R, level, restarts, iterations, seed, witnesses)


def estimate_wcb(R: Bioperator, level: int, restarts: int = 32, iterations: int = 200,
                 seed=0, witnesses=()) -> Estimate:
    """Lower bound for ``||R||_wcb``; outputs are measured at level ``level**2``."""
    return _bilinear_estimate(weak_amplify, R, level, restarts, iterations, seed, witnesses)


def witness_report(est: Estimate) -> dict:
    u, v = est.witness
    return {
        "level": est.level,
        "value": float(est.value),
        "witness_u": u.to_json(inline_space=False),
        "witness_v": v.to_json(inline_space=False),
    }


def bifunctional_composite(f: Bioperator, v: AmplifiedElement, u: AmplifiedElement) -> np.ndarray:
    """The composite ``L -> L (x) K -> L (x) H_bar -> L`` of ``u``, ``1 (x) phi``
    and ``v`` for a bifunctional ``f : H_r x K_c -> C``.

    ``phi : K -> H_bar`` is given by ``<y, phi(z)> = f(y, z)``; on conjugated
    coordinates of ``H_bar`` its matrix is the coefficient matrix of ``f``.
    """
    if f.cod_G.dim != 1 or f.cod_G.out_dim != 1 or f.cod_G.in_dim != 1:
        raise ValueError("f must be a bifunctional")
    if f.dom_E.out_dim != 1:
        raise ValueError("first domain must be a row space")
    if f.dom_F.in_dim != 1:
        raise ValueError("second domain must be a column space")
    _check_domains(f, v, u)
    if v.shape[1] != u.shape[0]:
        raise ValueError(f"coefficient shapes {v.shape} and {u.shape} do not compose")
    E, F = f.dom_E, f.dom_F
    # phi in the coordinates where H_r and K_c bases are standard units
    Bv = E.basis_array.reshape(E.dim, E.in_dim)
    Bu = F.basis_array.reshape(F.dim, F.out_dim)
    phi = np.linalg.pinv(Bv) @ f.structure[:, :, 0] @ np.linalg.pinv(Bu).T
    s = v.shape[1]
    return v.assemble() @ np.kron(np.eye(s), phi) @ u.assemble()


def spatial_factorization(u: AmplifiedElement, v: AmplifiedElement):
    """Operators ``U = u (x) 1_{K2}`` and ``V ~ v (x) 1_{H1}`` with ``UV`` equal to
    the assembled ``T_s(u, v)`` for the canonical ``T : E x F -> E (x) F``."""
    E, F = u.space, v.space
    if u.shape[1] != v.shape[0]:
        raise ValueError(f"coefficient shapes {u.shape} and {v.shape} do not compose")
    h1, k2, h2 = E.in_dim, F.out_dim, F.in_dim
    s, c = v.shape
    U = np.kron(u.assemble(), np.eye(k2))
    v4 = v.assemble().reshape(s, k2, c, h2)
    V = np.einsum("lqmp,ab->laqmbp", v4, np.eye(h1)).reshape(s * h1 * k2, c * h1 * h2)
    return U, V


@dataclass
class IdentityReport:
    lhs_norm: float
    rhs_norm: float
    error: float
    ok: bool


def compression_identity_check(R: Bioperator, u: AmplifiedElement, v: AmplifiedElement, P,
                            ctx: DiamondContext | None = None, tol: float = 1e-12) -> IdentityReport:
    """``R_w(u P, P v) = R_s(u <> P, P <> v)`` at level ``m^2``."""
    P = as_cmatrix(P)
    m = u.shape[1]
    if P.shape != (m, m) or v.shape[0] != m:
        raise ValueError(f"projection {P.shape} does not match {u.shape} and {v.shape}")
    if not (np.allclose(P, P.conj().T, atol=1e-12) and np.allclose(P @ P, P, atol=1e-12)):
        raise ValueError("P must be an orthogonal projection")
    lhs = weak_amplify(R, module_action(None, u, P), module_action(P, v), ctx)
    rhs = strong_amplify(R, diamond_act_right(u, P), diamond_act_left(P, v))
    err = float(np.abs(lhs.coeffs - rhs.coeffs).max()) if lhs.coeffs.size else 0.0
    scale = max(1.0, float(np.abs(lhs.coeffs).max()) if lhs.coeffs.size else 0.0)
    return IdentityReport(amplified_norm(lhs), amplified_norm(rhs), err, err <= tol * scale)


def transported_strong_candidate(u: AmplifiedElement, v: AmplifiedElement, P):
    """The strong-amplification pair ``(u <> P, P <> v)`` whose value equals the
    weak amplification at ``(u P, P v)``; norms are unchanged (``P`` a projection)."""
    return diamond_act_right(u, P), diamond_act_left(P, v)

