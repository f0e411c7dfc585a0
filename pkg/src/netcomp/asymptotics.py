"""Large-n asymptotes of component-size distributions and criticality criteria.

All asymptotes are functions of the partial moments mu_ij, i + j <= 3, except
the degenerate directed branch, which needs the two rows u(0, .) and u(1, .).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .degree import DegreeDistribution, MomentSet, moments
from .errors import AsymptoteError
from .inversion import DiagonalProblem

log = logging.getLogger(__name__)

CRITICAL_TOL = 1e-8
ROOT_TOL = 1e-12
DEGENERATE_TOL = 1e-12

D = np.array([[0.0, -1.0], [1.0, 0.0]])
I = np.array([1.0, -1.0])


def adjugate(M: np.ndarray) -> np.ndarray:
    return D.T @ M @ D


@dataclass
class AsymptoteParams:
    """Constants of one asymptote plus diagnostics; call with n for w_inf(n)."""
    family: str
    constants: dict
    diagnostics: dict = field(default_factory=dict)

    def __getitem__(self, key):
        return self.constants[key]

    def log_value(self, n) -> np.ndarray:
        n = np.asarray(n, float)
        c = self.constants
        if self.family == "in_out":
            return math.log(c["C1"]) - c["C2"] * n - 1.5 * np.log(n)
        if self.family == "degenerate_directed":
            return math.log(c["L0"]) - 0.5 * np.log(n) - c["E0"] - c["E1"] * n
        m = n - 1.0      # the weak/two-layer formula is stated for w(m + 1)
        poly = c["L1"] * m**-1.5 + c["L2"] * m**-2.5
        with np.errstate(invalid="ignore", divide="ignore"):
            return (math.log(c["L0"]) + np.log(poly)
                    - (c["E1"] * m + c["E0"] + c["E_1"] / m))

    def __call__(self, n) -> np.ndarray:
        with np.errstate(under="ignore"):
            return np.exp(self.log_value(n))

    def as_dict(self) -> dict:
        def clean(v):
            if isinstance(v, np.ndarray):
                return v.tolist()
            if isinstance(v, (np.floating, np.integer)):
                return v.item()
            if isinstance(v, complex):
                return [v.real, v.imag]
            if isinstance(v, (list, tuple)):
                return [clean(x) for x in v]
            return v
        return {"family": self.family,
                "constants": {k: clean(v) for k, v in self.constants.items()},
                "diagnostics": {k: clean(v) for k, v in self.diagnostics.items()}}


# ---------------------------------------------------------------- in / out

def in_out_asymptote(m: MomentSet, side: str) -> AsymptoteParams:
    """h_inf(n) = C1 exp(-C2 n) n^(-3/2)."""
    if side not in ("in", "out"):
        raise AsymptoteError(f"side must be 'in' or 'out', got {side!r}")
    mu = m[(1, 0)]
    m2, m3 = (m[(2, 0)], m[(3, 0)]) if side == "in" else (m[(0, 2)], m[(0, 3)])
    var = mu * m3 - m2**2
    if not var > 0 or not mu > 0:
        raise AsymptoteError(f"asymptote undefined: mu*mu3 - mu2^2 = {var!r} is not positive")
    C1 = mu**2 / math.sqrt(2 * math.pi * var)
    C2 = (m2 - 2 * mu) ** 2 / (2 * var)
    return AsymptoteParams("in_out", {"C1": C1, "C2": C2, "side": side},
                           {"variance_term": var})


# ---------------------------------------------------------- weak / two-layer

def _shorthands(m: MomentSet, family: str):
    mu0 = np.asarray(m.mu0, float)
    mu1, mu2 = np.asarray(m.mu1, float), np.asarray(m.mu2, float)
    S1, S2 = np.asarray(m.Sigma1, float), np.asarray(m.Sigma2, float)
    if family == "weak_directed":
        a = (mu1 - mu2) / 2
        b = 1 - (mu1 + mu2) / 2
        A = (S2 - S1) / 2
        B = (S1 + S2) / 2
        C0 = I @ (mu1 - mu2) + mu1 @ D @ mu2
        C1row = I @ (S1 - S2) + mu1 @ D @ S2 - mu2 @ D @ S1
        inner = S2 @ D @ S1
    else:
        # the translation term carries the opposite sign to the directed case;
        # only this sign makes the n^(-1/2) terms cancel
        a = I - (mu1 - mu2) / 2
        b = 1 - (mu1 + mu2) / 2
        A = (S1 - S2) / 2
        B = (S1 + S2) / 2
        C0 = 4 - 2 * (mu1[0] + mu2[1]) - mu1 @ D @ mu2
        C1row = mu2 @ D @ S1 - mu1 @ D @ S2 - 2 * (S1[0] + S2[1])
        inner = S1 @ D @ S2
    return dict(mu0=mu0, a=a, b=b, A=A, B=B, C0=C0, C1row=C1row, inner=inner)


def root_coefficients(a, b, A, B) -> tuple[float, float, float]:
    """Coefficients (qa, qb, qc) of qa z^2 + qb z + qc = 0."""
    adjA, adjB = adjugate(A), adjugate(B)
    return float(a @ adjA @ a), float(a @ adjB @ a + a @ adjA @ b), float(a @ adjB @ b)


def admissible_roots(qa, qb, qc, tol: float = ROOT_TOL) -> list[float]:
    """Real roots in [-1, 1]; the linear branch uses -qc/qb."""
    scale = max(abs(qa), abs(qb), abs(qc), 1e-300)
    if abs(qa) <= tol * scale:
        if abs(qb) <= tol * scale:
            return []
        roots = [-qc / qb]
    else:
        disc = qb * qb - 4 * qa * qc
        if disc < -tol * scale**2:
            return []
        sq = math.sqrt(max(disc, 0.0))
        # numerically stable pair
        q = -0.5 * (qb + math.copysign(sq, qb)) if qb != 0 else -0.5 * sq
        roots = [q / qa] + ([qc / q] if q != 0 else [])
    return sorted({float(r) for r in roots if -1 - tol <= r <= 1 + tol})


def weak_asymptote(m: MomentSet, family: str = "weak_directed") -> AsymptoteParams:
    """w_inf(n + 1) = L0 (L1 n^-3/2 + L2 n^-5/2) exp(-(E1 n + E0 + E_1 / n))."""
    if family not in ("weak_directed", "two_layer"):
        raise AsymptoteError(f"unknown family {family!r}")
    if m.dims != 2:
        raise AsymptoteError("two coordinates required")
    if not (m[(1, 0)] > 0 and m[(0, 1)] > 0):
        raise AsymptoteError("asymptote undefined: a coordinate without edges")
    if family == "weak_directed":
        if abs(m[(2, 0)] - m[(1, 0)]) <= DEGENERATE_TOL * max(1.0, m[(1, 0)]):
            raise AsymptoteError("degenerate in-excess distribution (no node has two in-edges); "
                                 "use degenerate_asymptote", code="degenerate")
        if abs(m[(0, 2)] - m[(0, 1)]) <= DEGENERATE_TOL * max(1.0, m[(0, 1)]):
            raise AsymptoteError("degenerate out-excess distribution (no node has two out-edges); "
                                 "use degenerate_asymptote on the reversed network",
                                 code="degenerate")
    sh = _shorthands(m, family)
    a, b, A, B, mu0 = sh["a"], sh["b"], sh["A"], sh["B"], sh["mu0"]
    qa, qb, qc = root_coefficients(a, b, A, B)
    roots = admissible_roots(qa, qb, qc)
    if not roots:
        raise AsymptoteError("asymptote undefined: no admissible root in [-1, 1]", code="no_root")
    conds = [np.linalg.cond(A * r + B) for r in roots]
    if len(roots) > 1:
        warnings.warn(f"two admissible roots {roots}; choosing the better conditioned one")
        log.warning("two admissible roots %s, condition numbers %s", roots, conds)
    k = int(np.argmin(conds))
    r1 = roots[k]
    S = A * r1 + B
    detS = float(np.linalg.det(S))
    if not np.isfinite(conds[k]) or conds[k] > 1e14:
        raise AsymptoteError("asymptote undefined: S = A r1 + B is singular", code="singular")
    Si = np.linalg.inv(S)
    q = float(a @ Si @ a)
    if not (detS > 0 and q > 0):
        raise AsymptoteError(f"asymptote undefined: det S = {detS:.3e}, a'S^-1 a = {q:.3e}",
                             code="not_positive")
    v = a * r1 + b
    C1 = sh["C1row"] @ Si
    C2 = -Si @ sh["inner"] @ Si
    # the Gaussian expansion yields the density with reversed orientation; the
    # printed L1, L2 are negated so that w_inf is positive (checked against exact values)
    L0 = 2**-1.5 * (math.pi * detS * q) ** -0.5
    L1 = -float(C1 @ mu0 + v @ (C2 + C2.T) @ mu0)
    L2 = -float(mu0 @ C2 @ mu0)
    W = np.outer(a, b) - np.outer(b, a)
    E1 = float(a @ Si @ W @ Si @ b) / (2 * q)
    E0 = float(a @ Si @ W @ Si @ mu0) / q
    E_1 = float(a @ Si @ (np.outer(a, mu0) - np.outer(mu0, a)) @ Si @ mu0) / (2 * q)
    residual = float(sh["C0"] + C1 @ v + v @ C2 @ v)
    consts = dict(r1=r1, a=a, b=b, A=A, B=B, S=S, L0=L0, L1=L1, L2=L2,
                  E1=E1, E0=E0, E_1=E_1, C0=float(sh["C0"]), C1=C1, C2=C2)
    diag = dict(roots=roots, quadratic=(qa, qb, qc), condition=float(conds[k]),
                epsilon=float(np.linalg.norm(v)), half_power_residual=residual,
                criterion=criticality(m, "directed" if family == "weak_directed" else "two_layer"))
    if E1 < -1e-12:
        raise AsymptoteError(f"negative decay rate E1 = {E1!r}", code="negative_rate")
    return AsymptoteParams(family, consts, diag)


# ------------------------------------------------------------- degenerate

def _primed(u: DegreeDistribution) -> dict:
    m = u.mass
    rows = [m[0] if m.shape[0] > 0 else np.zeros(1), m[1] if m.shape[0] > 1 else np.zeros(m.shape[1])]
    l = np.arange(m.shape[1], dtype=float)
    out = {}
    for i, r in enumerate(rows):
        tot = float(r.sum())
        out[f"mu{i}"] = tot
        p = r / tot if tot > 0 else r
        for j in range(3):
            out[f"mu{i}{j}"] = float((l**j * p).sum())
    return out


def _as_degenerate(u: DegreeDistribution) -> tuple[DegreeDistribution, bool]:
    if u.kind != "directed" or u.dims != 2:
        raise AsymptoteError("degenerate branch needs a directed distribution", code="precondition")
    m = u.mass
    if not np.any(m[2:, :]):
        return u, False
    if not np.any(m[:, 2:]):
        return u.transpose(), True     # reversing every edge leaves weak components unchanged
    raise AsymptoteError("degenerate branch needs u(k, l) = 0 for k > 1", code="precondition")


def degenerate_asymptote(u: DegreeDistribution) -> AsymptoteParams:
    """w_inf(n) = L0 n^(-1/2) exp(-E0 - n E1) for at most one in-edge per node."""
    u, flipped = _as_degenerate(u)
    p = _primed(u)
    m01, m02, m11, m12 = p["mu01"], p["mu02"], p["mu11"], p["mu12"]
    if p["mu1"] > 0 and m11 >= 1:
        raise AsymptoteError(f"supercritical root process (mu'_11 = {m11!r} >= 1)",
                             code="supercritical")
    if p["mu0"] <= 0 or p["mu1"] <= 0:
        raise AsymptoteError("degenerate branch needs nodes with in-degree 0 and 1",
                             code="precondition")
    var = m12 - m11**2
    if not var > 0:
        raise AsymptoteError("asymptote undefined: mu'_12 - mu'_11^2 is not positive",
                             code="precondition")
    L0 = m01 * (m11 - 1) / ((m11 - m01 - 1) * math.sqrt(2 * math.pi * var))
    E0 = (m11 - 1) * (m01 + m02 - m01 * m11) / (m01 * var)
    E1 = (m11 - 1) ** 2 / (2 * var)
    C = 1 + m01 / (1 - m11)
    primed = {"mu'" + k[2:]: v for k, v in p.items()}
    return AsymptoteParams("degenerate_directed", dict(L0=L0, E0=E0, E1=E1, C=C, **primed),
                           {"reversed": flipped})


def root_component_sizes(u: DegreeDistribution, n_max: int) -> tuple[np.ndarray, float]:
    """(w0(n) for n = 1..n_max, C): sizes of the component below a root node.

    w0(1) = u0(0) and w0(n) = [k u0(k) * u1^{*(n-1)}](n - 1) / (n - 1) for n > 1.
    """
    u, _ = _as_degenerate(u)
    p = _primed(u)
    m = u.mass
    u0 = m[0] / p["mu0"]
    u1 = m[1] / p["mu1"] if m.shape[0] > 1 and p["mu1"] > 0 else np.zeros_like(u0)
    w0 = np.zeros(n_max)
    w0[0] = u0[0]
    if n_max > 1:
        F = np.zeros(len(u0) + 1)
        F[1:] = np.arange(len(u0)) * u0
        mant, logs = DiagonalProblem(F, [u1]).sums(n_max - 1, kmin=1)   # p = n - 1
        n = np.arange(2, n_max + 1)
        with np.errstate(under="ignore"):
            w0[1:] = mant * np.exp(logs) / (n - 1)
    C = 1 + p["mu01"] / (1 - p["mu11"]) if p["mu11"] < 1 else math.inf
    return w0, C


def degenerate_sizes(u: DegreeDistribution, n_max: int) -> np.ndarray:
    """w(n) = n w0(n) / C."""
    w0, C = root_component_sizes(u, n_max)
    return np.arange(1, n_max + 1) * w0 / C


# ------------------------------------------------------------- criticality

@dataclass(frozen=True)
class Criticality:
    value: float
    classification: str
    caveat: str = ""


def directed_criterion(m: MomentSet) -> float:
    mu, m11, m20, m02 = m[(1, 0)], m[(1, 1)], m[(2, 0)], m[(0, 2)]
    return 2 * mu * m11 - mu * m02 - mu * m20 + m02 * m20 - m11**2


def two_layer_criterion(m: MomentSet) -> float:
    return m[(1, 1)] ** 2 - (m[(2, 0)] - 2 * m[(1, 0)]) * (m[(0, 2)] - 2 * m[(0, 1)])


def criticality(m: MomentSet, kind: str, tol: float = CRITICAL_TOL) -> Criticality:
    if kind == "directed":
        v = directed_criterion(m)
        caveat = ""
    elif kind in ("two_layer", "multiplex"):
        v = two_layer_criterion(m)
        caveat = ("for two layers the sign alone does not decide whether a giant "
                  "component exists")
    else:
        raise AsymptoteError(f"unknown criticality kind {kind!r}")
    if abs(v) < tol:
        cls = "critical"
    elif v > 0:
        cls = "supercritical-side"
    else:
        cls = "subcritical-side"
    return Criticality(float(v), cls, caveat)


def gateaux_derivative_G(m: MomentSet) -> float:
    """Change of the two-layer criterion under uniform addition of layer-1 edges."""
    return (2 * m[(0, 1)] - m[(0, 2)]) * (2 * m[(1, 0)] - 1) + 2 * m[(0, 1)] * m[(1, 1)]


def asymptote_for(u: DegreeDistribution, kind: str) -> AsymptoteParams:
    """Dispatch on component kind: in, out, weak, multiplex."""
    if kind in ("in", "out"):
        return in_out_asymptote(moments(u), kind)
    if kind == "weak":
        m = u.mass
        if not np.any(m[2:, :]) or not np.any(m[:, 2:]):
            return degenerate_asymptote(u)
        return weak_asymptote(moments(u), "weak_directed")
    if kind == "multiplex":
        if u.dims != 2:
            raise AsymptoteError("asymptotes are provided for two layers only")
        return weak_asymptote(moments(u), "two_layer")
    raise AsymptoteError(f"unknown kind {kind!r}")
