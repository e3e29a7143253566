"""Temporal gluing cutoffs and space-time squiggling cutoffs.

chi_i: a smooth partition of unity in time subordinate to the window
structure I_{i-1} u J_i u I_i; exactly 1 on J_i and exactly 0 outside its
window, so the glued stress vanishes identically between the I intervals.

eta_i: mollified indicators of sinusoidally tilted time slabs; the tilt
keeps sum_i int eta_i^2 dx uniformly positive (target 1/5) at every time,
which is what lets the energy gap be pumped strictly between gluing times.
"""

from dataclasses import dataclass, field

import numpy as np

_EPS_TILT = 0.25       # slab shrink fraction (epsilon in (0, 1/3))
_EPS_MOLL = 1.0 / 64.0  # mollification fraction (epsilon_0)


def smoothstep(s):
    """C^infty step: exactly 0 for s <= 0, exactly 1 for s >= 1."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    out[s >= 1.0] = 1.0
    mid = (s > 0.0) & (s < 1.0)
    if np.any(mid):
        a = np.exp(-1.0 / s[mid])
        b = np.exp(-1.0 / (1.0 - s[mid]))
        out[mid] = a / (a + b)
    return out if out.ndim else float(out)


def smoothstep_deriv(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    mid = (s > 0.0) & (s < 1.0)
    if np.any(mid):
        x = s[mid]
        a = np.exp(-1.0 / x)
        b = np.exp(-1.0 / (1.0 - x))
        da = a / x**2
        db = -b / (1.0 - x) ** 2
        out[mid] = (da * (a + b) - a * (da + db)) / (a + b) ** 2
    return out if out.ndim else float(out)


def window_times(tau: float, horizon: float):
    """Anchor times t_{i-1} and count of windows covering [0, horizon].

    The last window's rest interval J_m must reach past the horizon so the
    chi family stays a partition of unity on all of [0, horizon].
    """
    n_windows = int(np.floor(max(horizon - tau / 3.0, 0.0) / tau)) + 2
    anchors = np.array([max((i - 1) * tau, 0.0) for i in range(n_windows)])
    return anchors, n_windows


@dataclass
class ChiFamily:
    """Temporal partition of unity for the gluing step."""

    tau: float
    times: np.ndarray
    n_windows: int = field(init=False)
    values: np.ndarray = field(init=False)     # (n_windows, n_times)
    dvalues: np.ndarray = field(init=False)

    def __post_init__(self):
        horizon = float(self.times[-1])
        _, m = window_times(self.tau, horizon)
        self.n_windows = m
        t = np.asarray(self.times)
        vals = np.zeros((m, len(t)))
        dvals = np.zeros((m, len(t)))
        third = self.tau / 3.0
        for i in range(m):
            te_prev = (i - 1) * self.tau   # t_{i-1}
            te_i = i * self.tau
            rise_a = te_prev + third       # I_{i-1} start
            fall_a = te_i + third          # I_i start
            if i == 0:
                up, dup = np.ones_like(t), np.zeros_like(t)
            else:
                up = smoothstep((t - rise_a) / third)
                dup = smoothstep_deriv((t - rise_a) / third) / third
            down = 1.0 - smoothstep((t - fall_a) / third)
            ddown = -smoothstep_deriv((t - fall_a) / third) / third
            vals[i] = np.where(t < te_i, up, down)
            dvals[i] = np.where(t < te_i, dup, ddown)
        self.values = vals
        self.dvalues = dvals

    def in_rest_interval(self, t: float) -> bool:
        """True when t lies in one of the J_i (all transitions are off)."""
        third = self.tau / 3.0
        r = np.mod(t, self.tau)
        return bool(r < third or r > 2 * third)

    def window_span(self, i: int, horizon: float):
        """Solve span [anchor, end] for the exact solution of window i."""
        anchor = max((i - 1) * self.tau, 0.0)
        end = min((i + 1) * self.tau + self.tau / 3.0, horizon)
        return anchor, end

    def partition_defect(self) -> float:
        return float(np.max(np.abs(self.values.sum(axis=0) - 1.0)))


def _bump_cdf_table(n: int = 4096):
    s = np.linspace(0.0, 1.0, n)
    u = 2.0 * s - 1.0
    w = np.zeros_like(s)
    mid = (s > 0) & (s < 1)
    w[mid] = np.exp(-1.0 / (1.0 - u[mid] ** 2))
    cdf = np.concatenate([[0.0], np.cumsum(0.5 * (w[1:] + w[:-1]))])
    cdf /= cdf[-1]
    return s, cdf


_CDF_S, _CDF_V = _bump_cdf_table()


def bump_cdf(x):
    """CDF of the standard one-sided bump on (0,1); exact 0/1 outside."""
    x = np.asarray(x, dtype=float)
    out = np.interp(x, _CDF_S, _CDF_V, left=0.0, right=1.0)
    return out


@dataclass
class EtaFamily:
    """Squiggling space-time cutoffs (plus the Cauchy-mode variants).

    Values are held on (time grid) x (x1 grid); the fields depend on x only
    through x1.  ``straight_zero`` replaces eta_0 by the straight temporal
    cutoff and adds the zeta ramp used to seed the energy before t_1.
    """

    tau: float
    times: np.ndarray
    n_x1: int
    straight_zero: bool = False
    eps_tilt: float = _EPS_TILT
    eps_moll: float = _EPS_MOLL
    n_windows: int = field(init=False)
    values: np.ndarray = field(init=False)   # (n_windows, n_times, n_x1)
    zeta: np.ndarray = field(init=False)     # (n_times,)

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        horizon = float(t[-1])
        self.n_windows = int(np.floor(horizon / self.tau)) + 1
        x1 = np.arange(self.n_x1) / self.n_x1
        shift = (2.0 * self.eps_tilt * self.tau / 3.0) * np.sin(2 * np.pi * x1)
        # x-mollification nodes: average the shift over the kernel
        ny = 33
        y = (np.arange(ny) + 0.5) / ny * self.eps_moll
        wy = np.zeros(ny)
        u = 2.0 * (y / self.eps_moll) - 1.0
        wy = np.exp(-1.0 / np.maximum(1.0 - u * u, 1e-300))
        wy /= wy.sum()
        vals = np.zeros((self.n_windows, len(t), self.n_x1))
        width = self.eps_moll * self.tau
        for i in range(self.n_windows):
            if self.straight_zero and i == 0:
                prof = self._straight0(t)
                vals[i] = prof[:, None] * np.ones((1, self.n_x1))
                continue
            lo = i * self.tau + self.eps_tilt * self.tau / 3.0
            hi = i * self.tau + (3.0 - self.eps_tilt) * self.tau / 3.0
            acc = np.zeros((len(t), self.n_x1))
            for yk, wk in zip(y, wy):
                sh = ((2.0 * self.eps_tilt * self.tau / 3.0)
                      * np.sin(2 * np.pi * (x1 - yk)))
                arg_lo = (t[:, None] - sh[None, :] - lo) / width
                arg_hi = (t[:, None] - sh[None, :] - hi) / width
                acc += wk * (bump_cdf(arg_lo) - bump_cdf(arg_hi))
            vals[i] = acc
        self.values = vals
        if self.straight_zero:
            te1 = self.tau
            self.zeta = 1.0 - smoothstep((t - te1) / (self.tau / 3.0))
        else:
            self.zeta = np.zeros(len(t))

    def _straight0(self, t):
        """Straight cutoff: supported on [tau/6, 5tau/6], 1 on I_0."""
        sixth = self.tau / 6.0
        up = smoothstep((t - sixth) / sixth)
        down = 1.0 - smoothstep((t - 4.0 * sixth) / sixth)
        return np.where(t < 3.0 * sixth, up, down)

    def on_grid(self, i: int, t_idx: int, n: int) -> np.ndarray:
        """eta_i(t, .) broadcast to an (n, n, n) grid array."""
        prof = self.values[i, t_idx]
        if len(prof) != n:
            x = np.arange(n) / n
            prof = np.interp(x, np.arange(self.n_x1) / self.n_x1, prof,
                             period=1.0)
        return np.broadcast_to(prof[:, None, None], (n, n, n))

    def sum_int_sq(self, t_idx: int) -> float:
        """sum_i integral eta_i^2 dx at one time sample."""
        return float(np.sum(np.mean(self.values[:, t_idx, :] ** 2, axis=1)))

    def overlap_defect(self) -> float:
        """max over (t, x1) of eta_i * eta_j for i != j."""
        worst = 0.0
        for i in range(self.n_windows):
            for j in range(i + 1, self.n_windows):
                worst = max(worst, float(np.max(self.values[i]
                                                * self.values[j])))
        return worst

    def active_windows(self, t_idx: int, tol: float = 0.0) -> list:
        return [i for i in range(self.n_windows)
                if np.max(self.values[i, t_idx]) > tol]
