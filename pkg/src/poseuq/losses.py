"""Training objectives for the evidential pose regressor.

Two evidential data terms are supported: the negative log likelihood of the
Student-t predictive ("NLL") and the bounded inverse-density distance ("D"),
where the density is clipped below `clip_floor` before inverting. The
evidence regularizer scales the smooth-L1 residual by Phi = 2*nu + alpha.
Branch totals combine a geometric term with the evidential term, and the
final objective is a weighted sum of the rotation and translation branches:

    L_branch = L_geo + s_evd * (L_data + lambda * L_reg)
    L_final  = s_rot * L_rot + s_tr * L_tr

Distances are smooth L1 throughout, applied to wrapped differences for
angular components (including the residual inside the Student-t density).
Means are taken over the three components of a branch and over the batch.

Every loss here also exposes closed-form gradients with respect to the NIG
fields; the network trainer chains them through its layers, and the test
suite checks them against central finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import digamma, gammaln

from .evidential import DENSITY_CLIP_FLOOR, NIGParams
from .pose_math import EulerTriple, Pose6, smooth_l1, smooth_l1_grad, wrap_angle

VARIANT_D = "D"
VARIANT_NLL = "NLL"
BRANCH_TR = "tr"
BRANCH_ROT = "rot"


@dataclass(frozen=True)
class LossConfig:
    """Weights and switches of the total objective.

    Defaults: lambda_rot 0.01, lambda_tr 0.1, s_rot = s_tr = 1, and
    s_evd 0.1 per branch (the phase-1 value of the two-step schedule).
    """

    lambda_tr: float = 0.1
    lambda_rot: float = 0.01
    s_tr: float = 1.0
    s_rot: float = 1.0
    s_evd_tr: float = 0.1
    s_evd_rot: float = 0.1
    evd_variant: str = VARIANT_D
    use_geometric: bool = True
    clip_floor: float = DENSITY_CLIP_FLOOR

    def __post_init__(self):
        for name in ("lambda_tr", "lambda_rot", "s_tr", "s_rot",
                     "s_evd_tr", "s_evd_rot"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"LossConfig.{name} must be >= 0")
        if self.clip_floor <= 0.0:
            raise ValueError("LossConfig.clip_floor must be > 0")
        if self.evd_variant not in (VARIANT_D, VARIANT_NLL):
            raise ValueError(f"unknown evd_variant {self.evd_variant!r}")


@dataclass(frozen=True)
class EvidentialPrediction:
    """One NIG per pose component: translation (x, y, z), rotation (r, p, y)."""

    translation: tuple[NIGParams, NIGParams, NIGParams]
    rotation: tuple[NIGParams, NIGParams, NIGParams]

    def __post_init__(self):
        for branch in (self.translation, self.rotation):
            if len(branch) != 3 or not all(isinstance(p, NIGParams) for p in branch):
                raise ValueError("EvidentialPrediction needs 3 NIGParams per branch")

    def branch(self, name: str) -> tuple[NIGParams, ...]:
        if name == BRANCH_TR:
            return self.translation
        if name == BRANCH_ROT:
            return self.rotation
        raise ValueError(f"unknown branch {name!r}")


@dataclass(frozen=True)
class LossBreakdown:
    """Every term of the total objective, for logging and recomputation."""

    geometric_tr: float
    geometric_rot: float
    data_tr: float
    data_rot: float
    reg_tr: float
    reg_rot: float
    evd_tr: float
    evd_rot: float
    branch_tr: float
    branch_rot: float
    total: float


# ---------------------------------------------------------------------------
# Vectorized element-level terms with gradients
# ---------------------------------------------------------------------------

@dataclass
class BranchTerms:
    """Per-element loss terms and their gradients w.r.t. (gamma, nu, alpha, beta).

    Arrays share the broadcast shape of the inputs. `geo` only depends on
    gamma, so its nu/alpha/beta gradients are identically zero and omitted.
    """

    data: np.ndarray
    reg: np.ndarray
    geo: np.ndarray
    d_data: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    d_reg: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]
    d_geo_gamma: np.ndarray


def element_terms(gamma, nu, alpha, beta, y, *, angular: bool,
                  variant: str = VARIANT_D,
                  clip_floor: float = DENSITY_CLIP_FLOOR) -> BranchTerms:
    """Element-wise data/regularizer/geometric terms plus analytic gradients."""
    gamma = np.asarray(gamma, dtype=float)
    nu = np.asarray(nu, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    y = np.asarray(y, dtype=float)

    r = y - gamma
    if angular:
        r = wrap_angle(r)

    # Student-t predictive with squared scale s2 and dof d.
    s2 = beta * (1.0 + nu) / (nu * alpha)
    d = 2.0 * alpha
    q = d * s2 + r * r
    logz = np.log1p(r * r / (d * s2))
    half = 0.5 * (d + 1.0)
    logpdf = (gammaln(half) - gammaln(0.5 * d)
              - 0.5 * np.log(d * math.pi * s2) - half * logz)

    # d logpdf / d {r, s2, d}, then chain to the NIG fields.
    dlp_dr = -(d + 1.0) * r / q
    dlp_ds2 = -0.5 / s2 + (d + 1.0) * r * r / (2.0 * s2 * q)
    dlp_dd = (0.5 * (digamma(half) - digamma(0.5 * d)) - 0.5 / d
              - 0.5 * logz + (d + 1.0) * r * r / (2.0 * d * q))
    dlp_gamma = -dlp_dr  # dr/dgamma = -1
    dlp_nu = dlp_ds2 * (-beta / (alpha * nu * nu))
    dlp_alpha = dlp_ds2 * (-s2 / alpha) + 2.0 * dlp_dd
    dlp_beta = dlp_ds2 * (s2 / beta)

    if variant == VARIANT_D:
        log_floor = math.log(clip_floor)
        clipped = logpdf < log_floor
        inv_density = np.exp(-np.maximum(logpdf, log_floor))
        data = smooth_l1(inv_density)
        # Hard clip: zero gradient once the density falls below the floor.
        ddata_dlogpdf = np.where(clipped, 0.0,
                                 -smooth_l1_grad(inv_density) * inv_density)
    elif variant == VARIANT_NLL:
        data = -logpdf
        ddata_dlogpdf = np.full_like(logpdf, -1.0)
    else:
        raise ValueError(f"unknown variant {variant!r}")

    d_data = (ddata_dlogpdf * dlp_gamma, ddata_dlogpdf * dlp_nu,
              ddata_dlogpdf * dlp_alpha, ddata_dlogpdf * dlp_beta)

    sl1_r = smooth_l1(r)
    dsl1_r = smooth_l1_grad(r)
    phi = 2.0 * nu + alpha
    reg = sl1_r * phi
    d_reg = (-dsl1_r * phi, 2.0 * sl1_r, sl1_r, np.zeros_like(sl1_r))

    return BranchTerms(
        data=np.asarray(data), reg=np.asarray(reg), geo=np.asarray(sl1_r),
        d_data=d_data, d_reg=d_reg, d_geo_gamma=np.asarray(-dsl1_r),
    )


@dataclass
class BranchLoss:
    """Mean branch losses and the gradient of the weighted branch total."""

    geometric: float
    data: float
    reg: float
    evd: float
    total: float
    grads: tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


def branch_loss(gamma, nu, alpha, beta, y, *, angular: bool,
                cfg: LossConfig, branch: str) -> BranchLoss:
    """Branch total L_geo + s_evd * (L_data + lambda * L_reg) with gradients."""
    lam = cfg.lambda_tr if branch == BRANCH_TR else cfg.lambda_rot
    s_evd = cfg.s_evd_tr if branch == BRANCH_TR else cfg.s_evd_rot
    terms = element_terms(gamma, nu, alpha, beta, y, angular=angular,
                          variant=cfg.evd_variant, clip_floor=cfg.clip_floor)
    n = terms.data.size
    l_data = float(np.mean(terms.data))
    l_reg = float(np.mean(terms.reg))
    l_geo = float(np.mean(terms.geo)) if cfg.use_geometric else 0.0
    l_evd = l_data + lam * l_reg
    total = l_geo + s_evd * l_evd

    grads = []
    for i in range(4):
        g = (terms.d_data[i] + lam * terms.d_reg[i]) * s_evd
        if cfg.use_geometric and i == 0:
            g = g + terms.d_geo_gamma
        grads.append(g / n)
    return BranchLoss(geometric=l_geo, data=l_data, reg=l_reg, evd=l_evd,
                      total=total, grads=tuple(grads))


# ---------------------------------------------------------------------------
# Public per-sequence losses
# ---------------------------------------------------------------------------

def _nig_arrays(preds: Sequence[NIGParams]):
    gamma = np.array([p.gamma for p in preds])
    nu = np.array([p.nu for p in preds])
    alpha = np.array([p.alpha for p in preds])
    beta = np.array([p.beta for p in preds])
    return gamma, nu, alpha, beta


def _check_lengths(preds, targets):
    if len(preds) == 0:
        raise ValueError("need at least one prediction")
    if len(preds) != len(targets):
        raise ValueError(f"length mismatch: {len(preds)} predictions, "
                         f"{len(targets)} targets")


def loss_nll(preds: Sequence[NIGParams], targets: Sequence[float],
             angular: bool = False) -> float:
    """Mean negative log likelihood of the Student-t predictive."""
    _check_lengths(preds, targets)
    g, n, a, b = _nig_arrays(preds)
    terms = element_terms(g, n, a, b, np.asarray(targets, dtype=float),
                          angular=angular, variant=VARIANT_NLL)
    return float(np.mean(terms.data))


def loss_d_elements(preds: Sequence[NIGParams], targets: Sequence[float],
                    clip_floor: float = DENSITY_CLIP_FLOOR,
                    angular: bool = False) -> np.ndarray:
    """Per-element inverse-density terms smooth_l1(1 / clipped_pdf)."""
    _check_lengths(preds, targets)
    g, n, a, b = _nig_arrays(preds)
    terms = element_terms(g, n, a, b, np.asarray(targets, dtype=float),
                          angular=angular, variant=VARIANT_D,
                          clip_floor=clip_floor)
    return terms.data


def loss_d(preds: Sequence[NIGParams], targets: Sequence[float],
           clip_floor: float = DENSITY_CLIP_FLOOR,
           angular: bool = False) -> float:
    """Mean bounded data term; each element is at most smooth_l1(1/clip_floor)."""
    return float(np.mean(loss_d_elements(preds, targets, clip_floor, angular)))


def loss_r(preds: Sequence[NIGParams], targets: Sequence[float],
           angular: bool = False) -> float:
    """Mean evidence regularizer: smooth-L1 residual scaled by Phi = 2*nu + alpha."""
    _check_lengths(preds, targets)
    g, n, a, b = _nig_arrays(preds)
    terms = element_terms(g, n, a, b, np.asarray(targets, dtype=float),
                          angular=angular)
    return float(np.mean(terms.reg))


def loss_evd(pred: EvidentialPrediction, target: Pose6, cfg: LossConfig,
             branch: str) -> float:
    """Evidential branch loss L_data + lambda * L_reg over 3 components."""
    nigs = pred.branch(branch)
    vec = target.as_vector()
    if branch == BRANCH_TR:
        y, angular, lam = vec[:3], False, cfg.lambda_tr
    else:
        y, angular, lam = vec[3:], True, cfg.lambda_rot
    if cfg.evd_variant == VARIANT_NLL:
        data = loss_nll(nigs, y, angular=angular)
    else:
        data = loss_d(nigs, y, clip_floor=cfg.clip_floor, angular=angular)
    return data + lam * loss_r(nigs, y, angular=angular)


def loss_geometric(pred_mean: Pose6, target: Pose6, branch: str) -> float:
    """Mean smooth-L1 pose distance; rotation uses wrapped angle differences."""
    if not isinstance(pred_mean.rotation, EulerTriple) or \
            not isinstance(target.rotation, EulerTriple):
        raise ValueError("loss_geometric requires Euler-form poses on both sides")
    pv, tv = pred_mean.as_vector(), target.as_vector()
    if branch == BRANCH_TR:
        return float(np.mean(smooth_l1(pv[:3] - tv[:3])))
    if branch == BRANCH_ROT:
        return float(np.mean(smooth_l1(wrap_angle(pv[3:] - tv[3:]))))
    raise ValueError(f"unknown branch {branch!r}")


def _branches(pred: EvidentialPrediction, target: Pose6, cfg: LossConfig):
    vec = target.as_vector()
    out = {}
    for branch, y, angular in ((BRANCH_TR, vec[:3], False),
                               (BRANCH_ROT, vec[3:], True)):
        g, n, a, b = _nig_arrays(pred.branch(branch))
        out[branch] = branch_loss(g, n, a, b, y, angular=angular,
                                  cfg=cfg, branch=branch)
    return out


def _breakdown(tr: BranchLoss, rot: BranchLoss, cfg: LossConfig) -> LossBreakdown:
    total = cfg.s_rot * rot.total + cfg.s_tr * tr.total
    return LossBreakdown(
        geometric_tr=tr.geometric, geometric_rot=rot.geometric,
        data_tr=tr.data, data_rot=rot.data,
        reg_tr=tr.reg, reg_rot=rot.reg,
        evd_tr=tr.evd, evd_rot=rot.evd,
        branch_tr=tr.total, branch_rot=rot.total,
        total=total,
    )


def loss_final(pred: EvidentialPrediction, target: Pose6,
               cfg: LossConfig) -> tuple[float, LossBreakdown]:
    """Total objective s_rot * L_rot + s_tr * L_tr with its full breakdown."""
    branches = _branches(pred, target, cfg)
    parts = _breakdown(branches[BRANCH_TR], branches[BRANCH_ROT], cfg)
    return parts.total, parts


def loss_final_grads(pred: EvidentialPrediction, target: Pose6, cfg: LossConfig):
    """Total, breakdown, and d(total)/d(NIG field) per branch.

    Gradients come back as {branch: (dgamma, dnu, dalpha, dbeta)} with one
    entry per component, already scaled by the branch factor s_tr / s_rot.
    """
    branches = _branches(pred, target, cfg)
    parts = _breakdown(branches[BRANCH_TR], branches[BRANCH_ROT], cfg)
    grads = {}
    for branch, scale in ((BRANCH_TR, cfg.s_tr), (BRANCH_ROT, cfg.s_rot)):
        grads[branch] = tuple(scale * g for g in branches[branch].grads)
    return parts.total, parts, grads
