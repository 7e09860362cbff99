"""Contact geometry of the 5D orientation-frequency-phase space.

The state space is Q = R^2 x S^1 x R^+ x S^1 with coordinates
(x, y, theta, f, s): position, orientation (half-circle, period pi),
spatial frequency (> 0) and a phase fiber coordinate (period 2*pi).
The admissible ("horizontal") directions are the kernel of the one-form

    Theta = -f sin(theta) dx + f cos(theta) dy - ds,

spanned by the frame

    X1 = cos(theta) dx + sin(theta) dy
    X2 = dtheta
    X3 = -sin(theta) dx + cos(theta) dy + f ds
    X4 = df.

X1 and X2 do not commute, so iterated brackets of the frame span all of
TQ and constant-coefficient integral curves of the frame connect any two
points. This module provides the frame, its Lie brackets, and numerical
integration of those curves (forward Euler and classic RK4).

Coordinate order is (x, y, theta, f, s) everywhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

TWO_PI = 2.0 * math.pi

# Curves are truncated before the frequency coordinate reaches this floor;
# Q requires f > 0.
F_FLOOR = 1e-6


class TangentVector5(NamedTuple):
    """Tangent vector in coordinate order (x, y, theta, f, s)."""

    dx: float
    dy: float
    dtheta: float
    df: float
    ds: float

    def as_array(self) -> np.ndarray:
        return np.array(self, dtype=float)


ZERO_VECTOR = TangentVector5(0.0, 0.0, 0.0, 0.0, 0.0)


@dataclass(frozen=True)
class CorticalPoint:
    """Point of Q. theta is reduced mod pi, s mod 2*pi; f must be positive."""

    x: float
    y: float
    theta: float
    f: float
    s: float

    def __post_init__(self):
        for name in ("x", "y", "theta", "f", "s"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"non-finite coordinate {name}={v!r}")
        if self.f <= 0.0:
            raise ValueError(f"frequency coordinate must be positive, got {self.f}")
        object.__setattr__(self, "theta", self.theta % math.pi)
        object.__setattr__(self, "s", self.s % TWO_PI)

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta, self.f, self.s])

    @staticmethod
    def from_array(state) -> "CorticalPoint":
        x, y, theta, f, s = (float(v) for v in state)
        return CorticalPoint(x, y, theta, f, s)


def one_form_eval(p: CorticalPoint, v: TangentVector5) -> float:
    """Evaluate the contact one-form at p on v.

    Returns -f*sin(theta)*dx + f*cos(theta)*dy - ds; horizontal vectors
    evaluate to zero.
    """
    return -p.f * math.sin(p.theta) * v.dx + p.f * math.cos(p.theta) * v.dy - v.ds


def horizontal_frame(p: CorticalPoint):
    """The four horizontal fields (X1, X2, X3, X4) evaluated at p."""
    c, s = math.cos(p.theta), math.sin(p.theta)
    x1 = TangentVector5(c, s, 0.0, 0.0, 0.0)
    x2 = TangentVector5(0.0, 0.0, 1.0, 0.0, 0.0)
    x3 = TangentVector5(-s, c, 0.0, 0.0, p.f)
    x4 = TangentVector5(0.0, 0.0, 0.0, 1.0, 0.0)
    return x1, x2, x3, x4


def lie_bracket(i: int, j: int, p: CorticalPoint) -> TangentVector5:
    """Commutator [Xi, Xj] at p, for frame indices i, j in {1..4}.

    Only three brackets are nonzero (up to antisymmetry):
    [X1,X2] = sin(theta) dx - cos(theta) dy,
    [X2,X3] = -cos(theta) dx - sin(theta) dy,
    [X3,X4] = -ds.
    """
    if i not in (1, 2, 3, 4) or j not in (1, 2, 3, 4):
        raise IndexError(f"frame indices must be in 1..4, got ({i}, {j})")
    if i == j:
        return ZERO_VECTOR
    if i > j:
        v = lie_bracket(j, i, p)
        return TangentVector5(-v.dx, -v.dy, -v.dtheta, -v.df, -v.ds)
    c, s = math.cos(p.theta), math.sin(p.theta)
    if (i, j) == (1, 2):
        return TangentVector5(s, -c, 0.0, 0.0, 0.0)
    if (i, j) == (2, 3):
        return TangentVector5(-c, -s, 0.0, 0.0, 0.0)
    if (i, j) == (3, 4):
        return TangentVector5(0.0, 0.0, 0.0, 0.0, -1.0)
    return ZERO_VECTOR


def spanning_matrix(p: CorticalPoint) -> np.ndarray:
    """5x5 matrix with columns X1, X2, X3, X4, [X1,X2] at p.

    Full rank everywhere on Q: the frame is bracket generating.
    """
    cols = [v.as_array() for v in horizontal_frame(p)]
    cols.append(lie_bracket(1, 2, p).as_array())
    return np.stack(cols, axis=1)


def _velocity(state: np.ndarray, coeffs) -> np.ndarray:
    """Velocity of the combination c1*X1 + c2*X2 + c3*X3 + c4*X4 at `state`.

    `state` uses unwrapped coordinates; no angle reduction happens here so
    that integration lives on the universal cover.
    """
    theta, f = state[2], state[3]
    c1, c2, c3, c4 = coeffs
    ct, st = math.cos(theta), math.sin(theta)
    return np.array([
        c1 * ct - c3 * st,
        c1 * st + c3 * ct,
        c2,
        c4,
        c3 * f,
    ])


def _rk4_step(state, coeffs, h):
    k1 = _velocity(state, coeffs)
    k2 = _velocity(state + 0.5 * h * k1, coeffs)
    k3 = _velocity(state + 0.5 * h * k2, coeffs)
    k4 = _velocity(state + h * k3, coeffs)
    return state + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _euler_step(state, coeffs, h):
    return state + h * _velocity(state, coeffs)


@dataclass
class IntegralCurve:
    """Time-sampled horizontal integral curve.

    `states` holds raw (unwrapped) coordinates, one row per sample in
    coordinate order (x, y, theta, f, s); wrapping theta mid-curve would
    corrupt closed-form comparisons and plots, so reduction only happens
    when converting samples to CorticalPoint. Consecutive samples are
    separated by exactly `step` in t.
    """

    times: np.ndarray
    states: np.ndarray
    coeffs: tuple
    step: float
    truncated: bool = False

    @property
    def samples(self):
        """Ordered (t, CorticalPoint) pairs with reduced fiber coordinates."""
        return [(float(t), CorticalPoint.from_array(row))
                for t, row in zip(self.times, self.states)]

    def endpoint_state(self) -> np.ndarray:
        """Final raw state (unwrapped theta / s)."""
        return self.states[-1].copy()

    def endpoint(self) -> CorticalPoint:
        return CorticalPoint.from_array(self.states[-1])

    def to_csv(self, path) -> None:
        """Write `t,x,y,theta,f,s` rows, 17 significant digits per value.

        Values are the raw unwrapped coordinates so exported arcs stay
        smooth across the angle seams.
        """
        with open(path, "w") as fh:
            fh.write("t,x,y,theta,f,s\n")
            for t, row in zip(self.times, self.states):
                vals = [t] + list(row)
                fh.write(",".join(f"{v:.17g}" for v in vals) + "\n")


def integrate_curve(start: CorticalPoint, coeffs, step: float, duration: float,
                    method: str = "rk4") -> IntegralCurve:
    """Integrate gamma' = c1*X1 + c2*X2 + c3*X3 + c4*X4 from `start`.

    The requested duration is split into ceil(duration/step) equal steps so
    the final sample lands exactly on t = duration. If the frequency
    coordinate would cross F_FLOOR the curve is truncated at the last valid
    sample and `truncated` is set.

    Args:
        start: initial point (its f must be positive).
        coeffs: four finite coefficients (c1, c2, c3, c4).
        step: requested time increment, > 0 and <= duration.
        duration: total integration time, > 0.
        method: 'rk4' (default) or 'euler'.
    """
    coeffs = tuple(float(c) for c in coeffs)
    if len(coeffs) != 4 or not all(math.isfinite(c) for c in coeffs):
        raise ValueError(f"need four finite coefficients, got {coeffs!r}")
    if not (step > 0.0 and math.isfinite(step)):
        raise ValueError(f"step must be positive and finite, got {step}")
    if not (duration > 0.0 and math.isfinite(duration)):
        raise ValueError(f"duration must be positive and finite, got {duration}")
    if step > duration:
        raise ValueError(f"step {step} exceeds duration {duration}")
    stepper = {"rk4": _rk4_step, "euler": _euler_step}.get(method)
    if stepper is None:
        raise ValueError(f"unknown method {method!r}; use 'rk4' or 'euler'")

    n_steps = max(1, math.ceil(duration / step - 1e-12))
    h = duration / n_steps

    state = start.as_array()
    states = [state]
    truncated = False
    for _ in range(n_steps):
        nxt = stepper(state, coeffs, h)
        if nxt[3] <= F_FLOOR:
            truncated = True
            break
        states.append(nxt)
        state = nxt
    states = np.array(states)
    times = h * np.arange(len(states))
    return IntegralCurve(times=times, states=states, coeffs=coeffs, step=h,
                         truncated=truncated)


def curve_fan(start: CorticalPoint, base_field: int, sweep_field: int,
              coefficients: Sequence[float], step: float, duration: float,
              method: str = "rk4"):
    """Fan of curves along X_base + c * X_sweep, one per coefficient value.

    All curves share `start`; the returned list follows the order of
    `coefficients`.
    """
    if base_field not in (1, 2, 3, 4) or sweep_field not in (1, 2, 3, 4):
        raise IndexError("field indices must be in 1..4")
    coefficients = list(coefficients)
    if not coefficients:
        raise ValueError("coefficient list must be nonempty")
    curves = []
    for c in coefficients:
        coeffs = [0.0, 0.0, 0.0, 0.0]
        coeffs[base_field - 1] = 1.0
        coeffs[sweep_field - 1] += float(c)
        curves.append(integrate_curve(start, coeffs, step, duration, method))
    return curves
