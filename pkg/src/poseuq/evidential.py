"""Normal-Inverse-Gamma machinery for evidential regression.

A NIG(gamma, nu, alpha, beta) posterior over a Gaussian's mean and variance
yields closed-form moments and a Student-t predictive density. The second
Student-t parameter is interpreted throughout as the *squared* scale
(variance-style convention); this changes pdf values, so it is pinned here
once and used everywhere.

All functions are pure; safe for unrestricted concurrent use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

#: Default density floor used when clipping low Student-t densities.
DENSITY_CLIP_FLOOR = 0.04


@dataclass(frozen=True)
class NIGParams:
    """Normal-Inverse-Gamma parameters for one regressed scalar.

    gamma is the location (units of the quantity), nu the evidence weight,
    alpha the shape, beta the scale (squared units). Validity requires
    nu > 0, beta > 0, and alpha > 1 (strict, so Var[mu] is finite).
    """

    gamma: float
    nu: float
    alpha: float
    beta: float

    def __post_init__(self):
        for name in ("gamma", "nu", "alpha", "beta"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"NIGParams.{name} must be finite")
        if self.nu <= 0.0:
            raise ValueError(f"NIGParams.nu must be > 0, got {self.nu}")
        if self.beta <= 0.0:
            raise ValueError(f"NIGParams.beta must be > 0, got {self.beta}")
        if self.alpha <= 1.0:
            raise ValueError(f"NIGParams.alpha must be > 1, got {self.alpha}")


@dataclass(frozen=True)
class StudentTParams:
    """Location / squared-scale / degrees-of-freedom of a Student-t density."""

    loc: float
    scale_sq: float
    dof: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.loc, self.scale_sq, self.dof)):
            raise ValueError("StudentTParams fields must be finite")
        if self.scale_sq <= 0.0:
            raise ValueError(f"StudentTParams.scale_sq must be > 0, got {self.scale_sq}")
        if self.dof <= 0.0:
            raise ValueError(f"StudentTParams.dof must be > 0, got {self.dof}")


def nig_moments(p: NIGParams) -> tuple[float, float]:
    """Predicted mean and epistemic variance: (gamma, beta / (nu * (alpha - 1)))."""
    return p.gamma, p.beta / (p.nu * (p.alpha - 1.0))


def nig_aleatoric(p: NIGParams) -> float:
    """Expected observation variance E[sigma^2] = beta / (alpha - 1)."""
    return p.beta / (p.alpha - 1.0)


def evidence_phi(p: NIGParams) -> float:
    """Total evidence Phi = 2*nu + alpha."""
    return 2.0 * p.nu + p.alpha


def predictive_student(p: NIGParams) -> StudentTParams:
    """Student-t predictive of a NIG: St(gamma, beta*(1+nu)/(nu*alpha), 2*alpha)."""
    return StudentTParams(
        loc=p.gamma,
        scale_sq=p.beta * (1.0 + p.nu) / (p.nu * p.alpha),
        dof=2.0 * p.alpha,
    )


def student_t_logpdf(y, st: StudentTParams):
    """Log density of the Student-t at y (scalar or array)."""
    return _student_logpdf(np.asarray(y, dtype=float) - st.loc, st.scale_sq, st.dof)


def _student_logpdf(residual, scale_sq, dof):
    """Vectorized Student-t log pdf as a function of residual y - loc."""
    residual = np.asarray(residual, dtype=float)
    scale_sq = np.asarray(scale_sq, dtype=float)
    dof = np.asarray(dof, dtype=float)
    half = 0.5 * (dof + 1.0)
    logz = np.log1p(residual * residual / (dof * scale_sq))
    out = (gammaln(half) - gammaln(0.5 * dof)
           - 0.5 * np.log(dof * math.pi * scale_sq) - half * logz)
    if out.ndim == 0:
        return float(out)
    return out


def student_t_pdf(y, st: StudentTParams):
    """Student-t density at y; strictly positive, maximal at y = loc."""
    return np.exp(student_t_logpdf(y, st))


def clipped_density(y, st: StudentTParams, floor: float = DENSITY_CLIP_FLOOR):
    """Density with a floor: max(pdf(y), floor), bounding the reciprocal by 1/floor."""
    if floor <= 0.0:
        raise ValueError(f"density floor must be > 0, got {floor}")
    out = np.maximum(student_t_pdf(y, st), floor)
    if np.ndim(out) == 0:
        return float(out)
    return out
