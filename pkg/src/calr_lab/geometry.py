"""Elliptic coordinates and confocal-ellipse sampling.

Elliptic coordinates (rho, omega) with focal half-distance R are defined by

    x1 = R * cos(omega) * cosh(rho),
    x2 = R * sin(omega) * sinh(rho),

with rho >= 0 and omega in [0, 2*pi).  Level curves rho = const are
ellipses with foci (+-R, 0); every curve of the family shares the same
foci, which is what "confocal" means here.  The coordinate map degenerates
on the focal segment {x2 = 0, |x1| <= R} (rho = 0), where omega is not
unique.

The scale factor of the map is the same in both directions,

    Xi(rho, omega) = R * sqrt(sinh(rho)^2 + sin(omega)^2),

so arclength on the ellipse rho = rho0 is d sigma = Xi d omega and the
outward normal derivative is d/dnu = Xi^{-1} d/drho.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegeneratePoint

__all__ = [
    "EllipticPoint",
    "ConfocalGeometry",
    "CurvePanel",
    "to_cartesian",
    "to_elliptic",
    "metric_factor",
    "ellipse_curvature",
    "sample_ellipse",
]

# Relative half-width of the strip around the focal segment inside which
# to_elliptic refuses to assign an angle.
FOCAL_TOL = 1e-13

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class EllipticPoint:
    """A point in elliptic coordinates; omega is normalized to [0, 2*pi)."""

    rho: float
    omega: float

    def __post_init__(self) -> None:
        if not (self.rho >= 0.0 and math.isfinite(self.rho)):
            raise ValueError(f"rho must be finite and >= 0, got {self.rho}")
        if not math.isfinite(self.omega):
            raise ValueError(f"omega must be finite, got {self.omega}")
        object.__setattr__(self, "omega", self.omega % TWO_PI)


@dataclass(frozen=True)
class ConfocalGeometry:
    """Focal half-distance R and the two interface parameters.

    The core boundary is Gamma_i = {rho = rho_i}, the shell boundary is
    Gamma_e = {rho = rho_e}, with 0 < rho_i < rho_e.
    """

    R: float
    rho_i: float
    rho_e: float

    def __post_init__(self) -> None:
        if not (self.R > 0.0 and math.isfinite(self.R)):
            raise ValueError(f"R must be finite and > 0, got {self.R}")
        if not (0.0 < self.rho_i < self.rho_e) or not math.isfinite(self.rho_e):
            raise ValueError(
                f"need 0 < rho_i < rho_e, got rho_i={self.rho_i}, rho_e={self.rho_e}"
            )


@dataclass(frozen=True)
class CurvePanel:
    """One quadrature node of a discretized closed curve."""

    node: np.ndarray = field(repr=False)
    normal: np.ndarray = field(repr=False)
    curvature: float = 0.0
    weight: float = 0.0


def to_cartesian(R: float, p: EllipticPoint) -> np.ndarray:
    """Map an elliptic point to Cartesian coordinates."""
    return np.array(
        [
            R * math.cos(p.omega) * math.cosh(p.rho),
            R * math.sin(p.omega) * math.sinh(p.rho),
        ]
    )


def to_elliptic(R: float, x: np.ndarray) -> EllipticPoint:
    """Invert the coordinate map off the focal segment.

    Uses the closed-form root of the quadratic satisfied by cosh(rho)^2:
    with q = R^2 + |x|^2, one has cosh(rho)^2 = (q + sqrt(q^2 - 4 R^2 x1^2))
    / (2 R^2).  Raises DegeneratePoint on the focal segment, where omega
    is ill-defined.
    """
    x1 = float(x[0])
    x2 = float(x[1])
    scale = max(R, abs(x1), abs(x2))
    if abs(x2) <= FOCAL_TOL * scale and abs(x1) <= R * (1.0 + FOCAL_TOL):
        raise DegeneratePoint(f"point ({x1}, {x2}) lies on the focal segment")

    q = R * R + x1 * x1 + x2 * x2
    # q^2 - 4 R^2 x1^2 = (q - 2 R x1)(q + 2 R x1) and q >= 2 R |x1| always,
    # since q - 2 R |x1| = (R - |x1|)^2 + x2^2.  Evaluate in factored form.
    disc = math.sqrt((q - 2.0 * R * x1) * (q + 2.0 * R * x1))
    ch2 = (q + disc) / (2.0 * R * R)
    ch2 = max(ch2, 1.0)
    ch = math.sqrt(ch2)
    rho = math.log(ch + math.sqrt(max(ch2 - 1.0, 0.0)))
    sh = math.sqrt(max(ch2 - 1.0, 0.0))
    if sh == 0.0:
        # Off-segment points with x2 != 0 always have sh > 0; this branch
        # is unreachable after the focal-segment check above.
        raise DegeneratePoint(f"point ({x1}, {x2}) has degenerate angle")
    cos_w = min(1.0, max(-1.0, x1 / (R * ch)))
    sin_w = min(1.0, max(-1.0, x2 / (R * sh)))
    return EllipticPoint(rho, math.atan2(sin_w, cos_w))


def metric_factor(R: float, rho, omega):
    """Scale factor Xi(rho, omega); broadcasts over array arguments."""
    return R * np.sqrt(np.sinh(rho) ** 2 + np.sin(omega) ** 2)


def ellipse_curvature(R: float, rho0: float, omega) -> np.ndarray:
    """Curvature of the ellipse rho = rho0 at angle omega.

    With semi-axes a = R cosh(rho0), b = R sinh(rho0) the curvature is
    a * b / Xi^3.
    """
    a = R * np.cosh(rho0)
    b = R * np.sinh(rho0)
    return a * b / metric_factor(R, rho0, omega) ** 3


def sample_ellipse(R: float, rho0: float, N: int) -> list[CurvePanel]:
    """Discretize the ellipse rho = rho0 with N equispaced nodes in omega.

    Returns trapezoid panels: node, unit outward normal, curvature and
    arclength weight Xi * (2*pi/N).  The weights sum to the perimeter.
    """
    if N < 8 or N % 2 != 0:
        raise ValueError(f"N must be even and >= 8, got {N}")
    if not rho0 > 0.0:
        raise ValueError(f"rho0 must be > 0, got {rho0}")
    omegas = TWO_PI * np.arange(N) / N
    ch, sh = math.cosh(rho0), math.sinh(rho0)
    nodes = np.column_stack([R * np.cos(omegas) * ch, R * np.sin(omegas) * sh])
    xi = metric_factor(R, rho0, omegas)
    # Outward normal: grad rho / |grad rho| = (cos(w) sinh, sin(w) cosh) * R / Xi.
    normals = np.column_stack(
        [R * np.cos(omegas) * sh / xi, R * np.sin(omegas) * ch / xi]
    )
    curv = ellipse_curvature(R, rho0, omegas)
    weights = xi * (TWO_PI / N)
    return [
        CurvePanel(nodes[j], normals[j], float(curv[j]), float(weights[j]))
        for j in range(N)
    ]
