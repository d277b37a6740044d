"""Connection and curvature of a metric at a point.

Everything is computed in jet arithmetic: the metric components are expanded
to order ``k`` around the point, the inverse metric by a terminating Neumann
series, and each differentiation drops one order.  Only the final tensors are
read off as numbers.

Conventions::

    Gamma^i_jk  = 1/2 g^im (d_j g_mk + d_k g_mj - d_m g_jk)
    R^i_jkl     = d_k Gamma^i_jl - d_l Gamma^i_jk + Gamma^i_km Gamma^m_jl - Gamma^i_lm Gamma^m_jk
    R_ijkl      = g_im R^m_jkl
    R_ab        = R^m_amb

With these, the round sphere of radius 1 has ``R_ijkl = +(g_ik g_jl - g_il g_jk)``
and the half-space metric ``(dx^2+dy^2+dz^2)/z^2`` comes out with curvature
``-1``, so no sign flip is applied.
"""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from . import jets
from .dsl import Evaluator, Expr, MetricSpec
from .errors import EvaluationError, SingularMetricError

# Relative to the largest metric entry.
SINGULAR_RTOL = 1e-13

# Sign applied to R_ijkl after computing it with the conventions above.  Fixed by
# requiring metric (dx^2+dy^2+dz^2)/z^2 to have curvature -1; see tests.
RIEMANN_SIGN = 1.0


def levi_civita_symbol(n: int = 3) -> np.ndarray:
    eps = np.zeros((n,) * n)
    for perm in permutations(range(n)):
        inversions = sum(1 for a in range(n) for b in range(a + 1, n) if perm[a] > perm[b])
        eps[perm] = -1.0 if inversions % 2 else 1.0
    return eps


EPS3 = levi_civita_symbol(3)


@dataclass
class CurvatureBundle:
    """Curvature data at one point.  Index layout follows the math: ``gamma[i, j, k] = Gamma^i_jk``."""

    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    gamma: np.ndarray
    riemann_up: np.ndarray
    riemann_low: np.ndarray
    ricci: np.ndarray
    scalar: float
    nabla_riemann: np.ndarray | None = None
    cs: float | None = None
    cs_normalized: float | None = None

    @property
    def dim(self) -> int:
        return self.g.shape[0]


def inverse_jets(sp: jets.JetSpace, g: np.ndarray) -> np.ndarray:
    """Inverse of a matrix of jets, shape ``(n, n, N)``."""
    g0 = g[..., 0]
    scale = np.max(np.abs(g0))
    det = np.linalg.det(g0)
    if scale == 0 or abs(det) <= SINGULAR_RTOL * scale ** g0.shape[0]:
        raise SingularMetricError(f"metric is singular at the point (det={det!r})")
    inv0 = np.linalg.inv(g0)
    delta = g.copy()
    delta[..., 0] = 0
    x = -np.einsum("im,mjp->ijp", inv0, delta)
    term = np.zeros(g.shape, dtype=np.result_type(g, inv0))
    term[..., 0] = inv0
    inv = term.copy()
    for _ in range(sp.order):
        term = sp.einsum("im,mj->ij", x, term)
        inv = inv + term
    return inv


def _derivatives(sp: jets.JetSpace, arr: np.ndarray) -> np.ndarray:
    """All first partials; the new leading axis is the differentiation index."""
    return jets.gradient(sp, arr)


def christoffel_jets(sp: jets.JetSpace, g: np.ndarray, g_inv: np.ndarray | None = None) -> np.ndarray:
    """Gamma^i_jk as jets one order below ``sp``."""
    lo = jets.space(sp.nvars, sp.order - 1)
    if g_inv is None:
        g_inv = inverse_jets(sp, g)
    dg = _derivatives(sp, g)  # dg[a, i, j] = d_a g_ij
    first_kind = 0.5 * (np.transpose(dg, (1, 0, 2, 3)) + np.transpose(dg, (1, 2, 0, 3)) - dg)
    return lo.einsum("im,mjk->ijk", g_inv[..., : lo.size], first_kind)


def riemann_from_christoffel(sp: jets.JetSpace, gamma: np.ndarray) -> np.ndarray:
    """R^i_jkl as jets one order below the space of ``gamma``."""
    lo = jets.space(sp.nvars, sp.order - 1)
    dgam = _derivatives(sp, gamma)  # dgam[a, i, j, k] = d_a Gamma^i_jk
    gl = gamma[..., : lo.size]
    r = np.transpose(dgam, (1, 2, 0, 3, 4)) - np.transpose(dgam, (1, 2, 3, 0, 4))
    r = r + lo.einsum("ikm,mjl->ijkl", gl, gl) - lo.einsum("ilm,mjk->ijkl", gl, gl)
    return r


def curvature_from_metric_jets(
    sp: jets.JetSpace,
    g: np.ndarray,
    point: Sequence[float],
    nabla_r: bool = False,
    cs: bool = False,
) -> CurvatureBundle:
    """Assemble a bundle from metric jets of order >= 2 (>= 3 for ``nabla_r``)."""
    need = 3 if nabla_r else 2
    if sp.order < need:
        raise ValueError(f"need metric jets of order {need}, got {sp.order}")
    n = sp.nvars
    g_inv = inverse_jets(sp, g)
    sp1 = jets.space(n, sp.order - 1)
    sp2 = jets.space(n, sp.order - 2)
    gamma = christoffel_jets(sp, g, g_inv)
    r_up = riemann_from_christoffel(sp1, gamma)
    r_low = RIEMANN_SIGN * sp2.einsum("im,mjkl->ijkl", g[..., : sp2.size], r_up)
    r_up = RIEMANN_SIGN * r_up

    g0 = g[..., 0]
    ginv0 = g_inv[..., 0]
    gam0 = gamma[..., 0]
    rup0 = r_up[..., 0]
    rlow0 = r_low[..., 0]
    ricci = np.einsum("mamb->ab", rup0)
    scalar = np.einsum("ab,ab->", ginv0, ricci)

    nabla = None
    if nabla_r:
        d_r = _derivatives(sp2, r_low)[..., 0]  # d_r[m, i, j, k, l]
        nabla = (
            d_r
            - np.einsum("pmi,pjkl->mijkl", gam0, rlow0)
            - np.einsum("pmj,ipkl->mijkl", gam0, rlow0)
            - np.einsum("pmk,ijpl->mijkl", gam0, rlow0)
            - np.einsum("pml,ijkp->mijkl", gam0, rlow0)
        )

    cs_raw = cs_norm = None
    if cs:
        if n != 3:
            raise ValueError("Chern-Simons density is defined for 3-dimensional metrics only")
        dgam0 = _derivatives(sp1, gamma)[..., 0]  # dgam0[j, q, k, p] = d_j Gamma^q_kp
        cs_raw = chern_simons_from(gam0, dgam0)
        cs_norm = cs_raw / np.sqrt(abs(np.linalg.det(g0)))

    return CurvatureBundle(
        point=np.asarray(point, dtype=float),
        g=g0,
        g_inv=ginv0,
        gamma=gam0,
        riemann_up=rup0,
        riemann_low=rlow0,
        ricci=ricci,
        scalar=scalar,
        nabla_riemann=nabla,
        cs=cs_raw,
        cs_normalized=cs_norm,
    )


def chern_simons_from(gamma: np.ndarray, dgamma: np.ndarray) -> float:
    """eps^ijk (Gamma^p_iq d_j Gamma^q_kp + 2/3 Gamma^p_iq Gamma^q_jr Gamma^r_kp)."""
    kinetic = np.einsum("ijk,piq,jqkp->", EPS3, gamma, dgamma)
    cubic = np.einsum("ijk,piq,qjr,rkp->", EPS3, gamma, gamma, gamma)
    return kinetic + 2.0 / 3.0 * cubic


def metric_jets(m: MetricSpec, point, order: int, params: Mapping[str, float] | None = None):
    ev = Evaluator(m.coords, point, order, {**m.params, **(params or {})})
    g = m.evaluate(point, order, evaluator=ev)
    return jets.space(m.dim, order), g, ev


def bundle_at(
    m: MetricSpec,
    point,
    nabla_r: bool = False,
    cs: bool = False,
    params: Mapping[str, float] | None = None,
) -> CurvatureBundle:
    """Connection, curvature and optional extras of ``m`` at ``point``."""
    order = 3 if nabla_r else 2
    sp, g, _ = metric_jets(m, point, order, params)
    return curvature_from_metric_jets(sp, g, point, nabla_r=nabla_r, cs=cs)


def cs_density_at(m: MetricSpec, point, normalized: bool = False, params=None) -> float:
    """Chern-Simons density of the Levi-Civita connection (no 1/4pi^2 prefactor).

    With ``normalized`` the value is divided by sqrt|det g|.
    """
    if m.dim != 3:
        raise ValueError(f"Chern-Simons density needs a 3-dimensional metric, got {m.dim}")
    b = bundle_at(m, point, cs=True, params=params)
    return b.cs_normalized if normalized else b.cs


def laplace_one_form_at(
    m: MetricSpec,
    w: Sequence[Expr],
    point,
    lam: float,
    params: Mapping[str, float] | None = None,
) -> np.ndarray:
    """Residual g^ij nabla_i nabla_j A_k - R^l_k A_l + lam A_k of a one-form."""
    if m.dim != 3:
        raise ValueError("the one-form Laplacian is implemented for 3-dimensional metrics")
    if len(w) != 3:
        raise ValueError(f"one-form needs 3 components, got {len(w)}")
    sp, g, ev = metric_jets(m, point, 2, params)
    bundle = curvature_from_metric_jets(sp, g, point)
    sp1 = jets.space(3, 1)
    a = np.stack([ev(e, 2).coeffs for e in w])  # order 2
    gamma = christoffel_jets(sp, g)  # order 1
    # nabla_j A_k as order-1 jets
    da = _derivatives(sp, a)  # da[j, k]
    cov = da - sp1.einsum("mjk,m->jk", gamma, a[..., : sp1.size])
    dcov = _derivatives(sp1, cov)[..., 0]  # dcov[i, j, k]
    cov0 = cov[..., 0]
    gam0 = bundle.gamma
    second = dcov - np.einsum("mij,mk->ijk", gam0, cov0) - np.einsum("mik,jm->ijk", gam0, cov0)
    rough = np.einsum("ij,ijk->k", bundle.g_inv, second)
    ricci_mixed = np.einsum("lm,mk->lk", bundle.g_inv, bundle.ricci)
    a0 = a[..., 0]
    return rough - np.einsum("lk,l->k", ricci_mixed, a0) + lam * a0


def check_bundle_identities(b: CurvatureBundle) -> dict[str, float]:
    """Max violation of the algebraic identities.

    Curvature identities are relative to max(1, max|R|, max|g|^2), the size of
    the round-off in R itself.
    """
    r = b.riemann_low
    scale = max(1.0, float(np.max(np.abs(r))), float(np.max(np.abs(b.g))) ** 2)
    n = b.dim
    out = {
        "metric_inverse": float(np.max(np.abs(b.g @ b.g_inv - np.eye(n)))),
        "gamma_symmetry": float(np.max(np.abs(b.gamma - np.transpose(b.gamma, (0, 2, 1))))),
        "antisym_12": float(np.max(np.abs(r + np.transpose(r, (1, 0, 2, 3))))) / scale,
        "antisym_34": float(np.max(np.abs(r + np.transpose(r, (0, 1, 3, 2))))) / scale,
        "pair_symmetry": float(np.max(np.abs(r - np.transpose(r, (2, 3, 0, 1))))) / scale,
        # R_ijkl + R_iklj + R_iljk
        "bianchi_1": float(np.max(np.abs(r + np.transpose(r, (0, 2, 3, 1)) + np.transpose(r, (0, 3, 1, 2))))) / scale,
        "ricci_symmetry": float(np.max(np.abs(b.ricci - b.ricci.T))) / scale,
    }
    if b.nabla_riemann is not None:
        d = b.nabla_riemann  # d[m, i, j, k, l]
        # nabla_m R_ijkl + nabla_k R_ijlm + nabla_l R_ijmk
        cyc = d + np.transpose(d, (3, 1, 2, 4, 0)) + np.transpose(d, (4, 1, 2, 0, 3))
        dscale = max(1.0, float(np.max(np.abs(d))), scale)
        out["bianchi_2"] = float(np.max(np.abs(cyc))) / dscale
    return out


__all__ = [
    "CurvatureBundle",
    "EvaluationError",
    "bundle_at",
    "check_bundle_identities",
    "cs_density_at",
    "curvature_from_metric_jets",
    "laplace_one_form_at",
    "levi_civita_symbol",
]
