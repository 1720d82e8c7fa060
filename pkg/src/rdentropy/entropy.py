"""Entropy-conservation correction and entropy-dissipation filters.

The correction turns any conservative set of element residuals into one
whose weighted sum matches the element's entropy-flux boundary integral
exactly: with V the entropy-variable DoF values and E the element defect,

    r_sigma = alpha (V_sigma - Vbar),   alpha = E / (sum dev^2 + eps),

which is zero-sum and repays E exactly up to the eps regularization.  The
filters add a zero-sum, provably entropy-producing term (face-gradient
jumps or a streamline form).

The functions here are pure array math over per-element blocks of shape
(n_elements, n_local); the mesh-aware machinery that feeds them lives in
``residuals.ResidualEvaluator``.  Thin per-element wrappers are provided
for diagnostics.
"""

import numpy as np

from .errors import InvalidArgumentError

DEFAULT_EPSILON = 1e-20


def entropy_defect(ghat_integral, V, phi):
    """Element defect E = (boundary integral of ghat) - sum_sigma V_sigma phi_sigma."""
    V = np.atleast_2d(np.asarray(V, float))
    phi = np.atleast_2d(np.asarray(phi, float))
    E = np.asarray(ghat_integral, float) - np.einsum("el,el->e", V, phi)
    return E if E.shape != (1,) else float(E[0])


def correction(V, E, eps=DEFAULT_EPSILON, return_alpha=False):
    """Zero-sum per-element perturbation repaying the entropy defect.

    Accepts a single element (V of shape (nloc,), scalar E) or stacked
    elements ((ne, nloc) and (ne,)).
    """
    if eps <= 0:
        raise InvalidArgumentError("epsilon must be positive")
    V = np.asarray(V, float)
    single = V.ndim == 1
    V = np.atleast_2d(V)
    E = np.atleast_1d(np.asarray(E, float))
    dev = V - V.mean(axis=1, keepdims=True)
    # recentre so the zero-sum property holds to round-off even for
    # near-constant states
    dev -= dev.mean(axis=1, keepdims=True)
    # denominator uses the very quadratic form the balance is tested with;
    # clipping guards the sign against cancellation at constant states
    q = np.einsum("el,el->e", V, dev)
    alpha = E / (np.maximum(q, 0.0) + eps)
    r = alpha[:, None] * dev
    if return_alpha:
        return (r[0], float(alpha[0])) if single else (r, alpha)
    return r[0] if single else r


def corrected_residual(phi, r, psi=None):
    """Compose base residuals, correction, and optional filter term."""
    out = np.asarray(phi, float) + np.asarray(r, float)
    if psi is not None:
        out = out + np.asarray(psi, float)
    return out


class EntropyCorrectionReport:
    """Per-element diagnostics of one correction pass."""

    def __init__(self, defect, alpha, r, production):
        self.defect = defect
        self.alpha = alpha
        self.r = r
        self.production = production


def filter_jump(mesh, dofmap, problem, u, element, theta):
    """Per-DoF jump-filter term of one element (diagnostic path)."""
    if theta < 0:
        raise InvalidArgumentError("filter theta must be nonnegative")
    from .residuals import ResidualEvaluator, SchemeConfig
    ev = ResidualEvaluator(mesh, dofmap, problem, SchemeConfig())
    V = problem.entropy.V(np.asarray(u, float))
    return ev.jump_term(V, theta)[element]


def filter_streamline(mesh, dofmap, problem, u, element, theta):
    """Per-DoF streamline-filter term of one element (diagnostic path)."""
    if theta < 0:
        raise InvalidArgumentError("filter theta must be nonnegative")
    from .residuals import ResidualEvaluator, SchemeConfig
    ev = ResidualEvaluator(mesh, dofmap, problem, SchemeConfig())
    V = problem.entropy.V(np.asarray(u, float))
    return ev.streamline_term(V, theta)[element]
