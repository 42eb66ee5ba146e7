"""Adaptive Dormand-Prince 5(4) integration with dense output and events.

The stepper follows the classic DOPRI5 layout: FSAL stages, an embedded
fourth-order error estimate, PI step-size control and Shampine's
fourth-order continuous extension.  Events are located on the dense
interpolant with an Illinois-modified regula falsi.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import ConfigError, NonFiniteRHS, SingularLocus, StepSizeUnderflow
from .fields import FieldSpec, eval_field
from .quaternion import as_quaternion

__all__ = [
    "Status",
    "EventSpec",
    "Event",
    "Trajectory",
    "dopri5",
    "integrate",
    "ProbeStatus",
    "ProbeResult",
    "limit_set_probe",
    "DEFAULT_RTOL",
    "DEFAULT_ATOL",
    "ESCAPE_RADIUS",
]

DEFAULT_RTOL = 1e-10
DEFAULT_ATOL = 1e-12
ESCAPE_RADIUS = 1e8
BLOWUP_NORM = 1e3
MAX_STEPS = 10_000_000
EVENT_TOL = 1e-10
EVENT_MAXITER = 60

# Dormand-Prince tableau
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
A71, A73, A74, A75, A76 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
E1, E3, E4, E5, E6, E7 = 71 / 57600, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40
D1 = -12715105075 / 11282082432
D3 = 87487479700 / 32700410799
D4 = -10690763975 / 1880347072
D5 = 701980252875 / 199316789632
D6 = -1453857185 / 822651844
D7 = 69997945 / 29380423

SAFE = 0.9
BETA = 0.04
EXPO1 = 0.2 - BETA * 0.75
FAC_MIN = 0.2   # hnew >= h * FAC_MIN
FAC_MAX = 10.0  # hnew <= h * FAC_MAX


class Status(str, Enum):
    COMPLETED = "COMPLETED"
    EVENT = "EVENT"
    ESCAPE = "ESCAPE"
    MAX_STEPS = "MAX_STEPS"


@dataclass(frozen=True)
class EventSpec:
    """Scalar surface ``g(q) = 0``.

    ``direction`` is +1 for increasing crossings, -1 for decreasing and 0
    for both.  Terminal events stop the integration at the root.
    """

    name: str
    func: Callable[[np.ndarray], float]
    direction: int = 0
    terminal: bool = False

    def __post_init__(self):
        if self.direction not in (-1, 0, 1):
            raise ConfigError("event direction must be -1, 0 or +1")


@dataclass(frozen=True)
class Event:
    t: float
    name: str
    q: np.ndarray
    g: float


@dataclass
class Trajectory:
    t: np.ndarray
    q: np.ndarray
    events: list[Event]
    status: Status
    stats: dict
    _t_old: np.ndarray = field(repr=False, default=None)
    _h: np.ndarray = field(repr=False, default=None)
    _rcont: np.ndarray = field(repr=False, default=None)

    @property
    def final(self) -> np.ndarray:
        return self.q[-1]

    @property
    def t_final(self) -> float:
        return float(self.t[-1])

    def __len__(self) -> int:
        return len(self.t)

    def __call__(self, t):
        """Dense output at ``t`` (scalar or array) inside the integrated span."""
        scalar = np.ndim(t) == 0
        ts = np.atleast_1d(np.asarray(t, dtype=float))
        out = np.empty((ts.size, self.q.shape[1]))
        if self._rcont is None or len(self._h) == 0:
            out[:] = self.q[0]
            return out[0] if scalar else out
        forward = self.t[-1] >= self.t[0]
        lo, hi = (self.t[0], self.t[-1]) if forward else (self.t[-1], self.t[0])
        span = max(abs(hi), abs(lo), 1.0)
        for j, tj in enumerate(ts):
            if tj < lo - 1e-12 * span or tj > hi + 1e-12 * span:
                raise ValueError(f"t = {tj} outside integrated span [{lo}, {hi}]")
            key = self.t[:-1] if forward else -self.t[:-1]
            s = tj if forward else -tj
            i = int(np.clip(np.searchsorted(key, s, side="right") - 1, 0, len(self._h) - 1))
            theta = (tj - self._t_old[i]) / self._h[i]
            out[j] = _interp(self._rcont[i], theta)
        return out[0] if scalar else out

    def to_csv(self, target=None, integrals: Sequence | None = None) -> str | None:
        """Write ``t,q0,q1,q2,q3[,I...]`` rows at 17 significant digits."""
        integrals = list(integrals or [])
        header = ["t"] + [f"q{k}" for k in range(self.q.shape[1])] + [d.name for d in integrals]
        rows = []
        for tk, qk in zip(self.t, self.q):
            vals = [tk, *qk]
            for d in integrals:
                try:
                    vals.append(d(qk))
                except SingularLocus:
                    vals.append(float("nan"))
            rows.append([_fmt(v) for v in vals])
        return _write_csv(target, header, rows)

    def events_to_csv(self, target=None) -> str | None:
        header = ["t", "event_name"] + [f"q{k}" for k in range(self.q.shape[1])]
        rows = [[_fmt(e.t), e.name, *(_fmt(v) for v in e.q)] for e in self.events]
        return _write_csv(target, header, rows)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write_csv(target, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    text = buf.getvalue()
    if target is None:
        return text
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", newline="") as fh:
            fh.write(text)
    return None


def _interp(r: np.ndarray, theta: float) -> np.ndarray:
    th1 = 1.0 - theta
    return r[0] + theta * (r[1] + th1 * (r[2] + theta * (r[3] + th1 * r[4])))


def _initial_step(f, t, y, f0, direction, rtol, atol, hmax):
    # Hairer's starting-step heuristic
    sk = atol + rtol * np.abs(y)
    dnf = np.max(np.abs(f0) / sk)
    dny = np.max(np.abs(y) / sk)
    h = 1e-6 if dnf <= 1e-10 or dny <= 1e-10 else 0.01 * dny / dnf
    h = min(h, hmax)
    y1 = y + direction * h * f0
    f1 = f(t + direction * h, y1)
    der2 = np.max(np.abs(f1 - f0) / sk) / h
    der12 = max(der2, dnf)
    h1 = max(1e-6, h * 1e-3) if der12 <= 1e-15 else (0.01 / der12) ** 0.2
    return min(100 * h, h1, hmax)


def _check_finite(k, t, y):
    if not np.all(np.isfinite(k)):
        raise NonFiniteRHS(f"non-finite field value at t = {t}", t=t, state=y.copy())


def dopri5(
    f: Callable[[float, np.ndarray], np.ndarray],
    t_span: tuple[float, float],
    y0,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    events: Iterable[EventSpec] = (),
    max_steps: int = MAX_STEPS,
    escape_radius: float | None = ESCAPE_RADIUS,
    h_fixed: float | None = None,
    h0: float | None = None,
    hmax: float | None = None,
) -> Trajectory:
    """Integrate ``y' = f(t, y)`` over ``t_span`` with DOPRI5.

    Parameters
    ----------
    f : callable
        Right-hand side returning an array shaped like ``y``.
    t_span : (float, float)
        Start and end times; ``t1 < t0`` integrates backward.
    y0 : array_like
        Initial state.
    rtol, atol : float
        Per-component local error target ``atol + rtol * |y|`` (max norm).
    events : iterable of EventSpec
        Surfaces located on the dense output.
    max_steps : int
        Cap on attempted steps; hitting it sets ``Status.MAX_STEPS``.
    escape_radius : float or None
        ``|y|`` above this stops the run with ``Status.ESCAPE``.
    h_fixed : float, optional
        Take fixed steps of this size without error control.

    Returns
    -------
    Trajectory
    """
    t0, t1 = float(t_span[0]), float(t_span[1])
    y = np.array(y0, dtype=float).reshape(-1)
    if not (rtol > 0 and atol > 0):
        raise ConfigError("rtol and atol must be positive")
    if not t1 != t0 or not (math.isfinite(t0) and math.isfinite(t1)):
        raise ConfigError("t_span must be finite and non-degenerate")
    if not np.all(np.isfinite(y)):
        raise ConfigError("initial state must be finite")
    events = list(events)
    direction = 1.0 if t1 > t0 else -1.0
    span = abs(t1 - t0)
    hmax = span if hmax is None else min(abs(hmax), span)

    ts, ys = [t0], [y.copy()]
    t_olds, hs, rconts = [], [], []
    found: list[Event] = []
    status = Status.COMPLETED
    nfev = 0

    k1 = np.asarray(f(t0, y), dtype=float)
    nfev += 1
    _check_finite(k1, t0, y)
    g_old = [float(ev.func(y)) for ev in events]

    if h_fixed is not None:
        h = abs(float(h_fixed))
        if h <= 0:
            raise ConfigError("h_fixed must be positive")
    elif h0 is not None:
        h = min(abs(h0), hmax)
    else:
        h = _initial_step(f, t0, y, k1, direction, rtol, atol, hmax)
        nfev += 1

    t = t0
    facold = 1e-4
    reject = False
    n_accept = n_reject = n_steps = 0
    last = False
    uround = np.finfo(float).eps

    while True:
        if n_steps >= max_steps:
            status = Status.MAX_STEPS
            break
        if abs(t1 - t) <= 10.0 * uround * max(abs(t), abs(t1)):
            break
        if h >= abs(t1 - t) * (1 - 1e-13) or (t + direction * h - t1) * direction > 0:
            h = abs(t1 - t)
            last = True
        if h < 10.0 * uround * max(abs(t), 1.0):
            if escape_radius is not None and np.linalg.norm(y) >= BLOWUP_NORM:
                # finite-time blow-up: steps collapse before |y| reaches the radius
                status = Status.ESCAPE
                break
            raise StepSizeUnderflow(f"step size {h:.3e} underflow at t = {t}", t=t, state=y.copy())
        n_steps += 1
        hs_ = direction * h
        y2 = y + hs_ * (A21 * k1)
        k2 = f(t + C2 * hs_, y2)
        y3 = y + hs_ * (A31 * k1 + A32 * k2)
        k3 = f(t + C3 * hs_, y3)
        y4 = y + hs_ * (A41 * k1 + A42 * k2 + A43 * k3)
        k4 = f(t + C4 * hs_, y4)
        y5 = y + hs_ * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4)
        k5 = f(t + C5 * hs_, y5)
        y6 = y + hs_ * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)
        k6 = f(t + hs_, y6)
        ynew = y + hs_ * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
        tnew = t1 if last else t + hs_
        k7 = np.asarray(f(tnew, ynew), dtype=float)
        nfev += 6

        if not (np.all(np.isfinite(ynew)) and np.all(np.isfinite(k7))):
            if escape_radius is not None and np.all(np.isfinite(y)) \
                    and np.linalg.norm(y) >= BLOWUP_NORM:
                h *= 0.2
                last = False
                reject = True
                n_reject += 1
                continue
            raise NonFiniteRHS(f"non-finite state near t = {t}", t=t, state=y.copy())

        if h_fixed is None:
            errv = hs_ * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
            sk = atol + rtol * np.maximum(np.abs(y), np.abs(ynew))
            err = float(np.max(np.abs(errv) / sk))
            fac11 = err ** EXPO1 if err > 0 else 0.0
            fac = fac11 / facold ** BETA if err > 0 else 0.0
            fac = min(1.0 / FAC_MIN, max(1.0 / FAC_MAX, fac / SAFE))
            hnew = h / fac
        else:
            err = 0.0
            hnew = h

        if err > 1.0:
            hnew = h / min(1.0 / FAC_MIN, fac11 / SAFE)
            reject = True
            n_reject += 1
            last = False
            h = hnew
            continue

        # accepted
        facold = max(err, 1e-4)
        n_accept += 1
        ydiff = ynew - y
        bspl = hs_ * k1 - ydiff
        rc = np.stack([
            y.copy(), ydiff, bspl, ydiff - hs_ * k7 - bspl,
            hs_ * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7),
        ])

        terminal_hit = None
        if events:
            g_new = [float(ev.func(ynew)) for ev in events]
            hits = []
            for idx, ev in enumerate(events):
                ga, gb = g_old[idx], g_new[idx]
                if ga == 0.0 or not (ga * gb < 0.0 or gb == 0.0):
                    continue
                rising = gb > ga
                if ev.direction == 1 and not rising or ev.direction == -1 and rising:
                    continue
                theta, qr, gr = _locate(ev.func, rc, ga, gb)
                hits.append((theta, idx, qr, gr))
            hits.sort(key=lambda x: x[0])
            for theta, idx, qr, gr in hits:
                found.append(Event(t + theta * hs_, events[idx].name, qr, gr))
                if events[idx].terminal:
                    terminal_hit = (theta, qr)
                    break
            g_old = g_new

        if terminal_hit is not None:
            theta, qr = terminal_hit
            t_ev = t + theta * hs_
            t_olds.append(t)
            hs.append(hs_)
            rconts.append(rc)
            ts.append(t_ev)
            ys.append(qr)
            status = Status.EVENT
            break

        t_olds.append(t)
        hs.append(hs_)
        rconts.append(rc)
        t, y, k1 = tnew, ynew, k7
        ts.append(t)
        ys.append(y.copy())

        if escape_radius is not None and np.linalg.norm(y) > escape_radius:
            status = Status.ESCAPE
            break
        if last:
            break
        if reject:
            hnew = min(hnew, h)
            reject = False
        h = min(hnew, hmax) if h_fixed is None else h

    if status is Status.ESCAPE:
        # terminal record so event logs show the divergence
        found.append(Event(float(t), "ESCAPE", y.copy(), float(np.linalg.norm(y))))
    traj = Trajectory(
        t=np.array(ts),
        q=np.array(ys),
        events=found,
        status=status,
        stats={
            "n_steps": n_steps,
            "n_accepted": n_accept,
            "n_rejected": n_reject,
            "n_fev": nfev,
            "rtol": rtol,
            "atol": atol,
            "h_fixed": h_fixed,
        },
        _t_old=np.array(t_olds),
        _h=np.array(hs),
        _rcont=np.array(rconts) if rconts else None,
    )
    return traj


def _locate(g, rc, ga, gb):
    """Illinois regula falsi on the step's dense interpolant (theta in [0, 1])."""
    a, b = 0.0, 1.0
    fa, fb = ga, gb
    side = 0
    theta, q, gv = 1.0, rc[0] + rc[1], gb
    if gb == 0.0:
        return 1.0, q, 0.0
    for _ in range(EVENT_MAXITER):
        theta = (a * fb - b * fa) / (fb - fa)
        if not a < theta < b:
            theta = 0.5 * (a + b)
        q = _interp(rc, theta)
        gv = float(g(q))
        if abs(gv) < 1e-3 * EVENT_TOL:
            break
        if gv * fb > 0:
            b, fb = theta, gv
            if side == -1:
                fa *= 0.5
            side = -1
        else:
            a, fa = theta, gv
            if side == 1:
                fb *= 0.5
            side = 1
        if b - a <= 4 * np.finfo(float).eps:
            break
    return theta, q, gv


def integrate(
    spec: FieldSpec,
    q0,
    t_span: tuple[float, float],
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
    events: Iterable[EventSpec] = (),
    max_steps: int = MAX_STEPS,
    escape_radius: float | None = ESCAPE_RADIUS,
    h_fixed: float | None = None,
    **kwargs,
) -> Trajectory:
    """Integrate the quaternion field of ``spec`` from ``q0``."""
    y0 = np.array(as_quaternion(q0), dtype=float)
    rhs = spec.rhs
    return dopri5(lambda t, y: rhs(y), t_span, y0, rtol=rtol, atol=atol, events=events,
                  max_steps=max_steps, escape_radius=escape_radius, h_fixed=h_fixed, **kwargs)


# -- limit sets ---------------------------------------------------------------

CONVERGE_DIST = 1e-4
EQUILIBRIUM_TOL = 1e-10


class ProbeStatus(str, Enum):
    CONVERGED = "CONVERGED"
    ESCAPED = "ESCAPED"
    UNDECIDED = "UNDECIDED"


@dataclass(frozen=True)
class ProbeResult:
    status: ProbeStatus
    target: np.ndarray | None = None
    target_index: int | None = None
    residual: float | None = None
    t: float = 0.0
    trajectory: Trajectory | None = None


def _window_decreasing(t, d, t_start, windows=5) -> bool:
    """Windowed maxima of ``d`` non-increasing after ``t_start``.

    Window maxima tolerate the wobble of spiral approach around a focus.
    """
    mask = np.abs(t) >= abs(t_start)
    tt, dd = np.abs(t[mask]), d[mask]
    if dd.size < 2:
        return True
    edges = np.linspace(tt[0], tt[-1], windows + 1)
    maxima = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        sel = (tt >= lo) & (tt <= hi)
        if np.any(sel):
            maxima.append(dd[sel].max())
    return all(b <= a * (1 + 1e-9) + 1e-10 for a, b in zip(maxima, maxima[1:]))


def limit_set_probe(
    spec: FieldSpec,
    q0,
    direction: str,
    targets: Sequence,
    t_max: float,
    rtol: float = DEFAULT_RTOL,
    atol: float = DEFAULT_ATOL,
) -> ProbeResult:
    """Decide whether the forward/backward orbit of ``q0`` tends to one of ``targets``.

    CONVERGED needs a final distance below 1e-4 together with a distance
    that does not grow over the last tenth of the run.
    """
    if direction not in ("forward", "backward"):
        raise ConfigError("direction must be 'forward' or 'backward'")
    if t_max <= 0:
        raise ConfigError("t_max must be positive")
    tg = [np.array(as_quaternion(p), dtype=float) for p in targets]
    for p in tg:
        if np.max(np.abs(np.array(eval_field(spec, p)))) >= EQUILIBRIUM_TOL:
            raise ConfigError(f"target {p.tolist()} is not an equilibrium")
    y0 = np.array(as_quaternion(q0), dtype=float)
    for i, p in enumerate(tg):
        if np.linalg.norm(y0 - p) == 0.0:
            return ProbeResult(ProbeStatus.CONVERGED, p, i, 0.0, 0.0)
    t_end = t_max if direction == "forward" else -t_max
    traj = integrate(spec, y0, (0.0, t_end), rtol=rtol, atol=atol)
    if traj.status is Status.ESCAPE:
        return ProbeResult(ProbeStatus.ESCAPED, t=traj.t_final, trajectory=traj)
    dists = np.array([np.linalg.norm(traj.q - p, axis=1) for p in tg])
    i = int(np.argmin(dists[:, -1]))
    res = float(dists[i, -1])
    if res < CONVERGE_DIST and _window_decreasing(traj.t, dists[i], 0.9 * t_end):
        return ProbeResult(ProbeStatus.CONVERGED, tg[i], i, res, traj.t_final, traj)
    return ProbeResult(ProbeStatus.UNDECIDED, residual=res, t=traj.t_final, trajectory=traj)
