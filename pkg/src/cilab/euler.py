"""Smooth local Euler solutions with an imposed drift, and flow maps of the
advecting velocity by backward characteristics.

The solver integrates  d_t v = -P[div((v+Z) (x) (v+Z))]  pseudo-spectrally
with an explicit fourth-order scheme; Leray projection absorbs the pressure
so divergence stays at rounding.  Products are dealiased by the 2/3 rule.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import fft as _fft

from .fields import (
    SpectralField, c0_norm, dealias, differential, from_grid, leray_project,
    outer_sym, to_grid, zeros,
)
from .grids import GridSpec
from .holder import holder_value


@dataclass
class SolverConfig:
    dt_cfl_factor: float = 0.25
    dealias: bool = True
    pad_factor: int = 4        # FFT upsampling for off-grid evaluation
    interp_points: int = 6     # Lagrange stencil width per axis
    blowup_guard: float = 1e6


def local_time_limit(v0: SpectralField, z_c2_alpha: float,
                     alpha: float = 0.05, horizon: float = np.inf) -> float:
    """Admissible gluing window from grid-estimated norms.

    tau <= min( (1/4) (||v0||_{C^{1+a}} + ||Z||_{C_T C^{2+a}})^{-1}, horizon ).
    ``z_c2_alpha`` is the caller's estimate of the drift norm (pass 0 for
    none); the limit is advisory at desk scale.
    """
    v_norm = holder_value(v0, 1.0 + alpha) if c0_norm(v0) > 0 else 0.0
    total = v_norm + z_c2_alpha
    if total <= 0:
        return horizon
    return min(0.25 / total, horizon)


def _advection_rhs(v: SpectralField, z: SpectralField | None,
                   cfg: SolverConfig) -> SpectralField:
    """-P[div((v+z) (x) (v+z))], dealiased."""
    u = v if z is None else v + z
    if cfg.dealias:
        u = dealias(u)
    ug = to_grid(u)
    tens = from_grid(outer_sym(ug, ug), u.grid, "symtensor3x3")
    if cfg.dealias:
        tens = dealias(tens)
    return -1.0 * leray_project(differential(tens, "div"))


def _cfl_dt(v: SpectralField, z: SpectralField | None,
            cfg: SolverConfig) -> float:
    u = v if z is None else v + z
    umax = c0_norm(u)
    from .fields import gradient_tensor
    gmax = float(np.abs(gradient_tensor(u)).max()) if umax > 0 else 0.0
    speed = umax * u.grid.n + gmax
    if speed == 0:
        return np.inf
    return cfg.dt_cfl_factor / speed


def _rk4_step(v: SpectralField, z_eval, t: float, dt: float,
              cfg: SolverConfig) -> SpectralField:
    z0 = z_eval(t) if z_eval else None
    zm = z_eval(t + 0.5 * dt) if z_eval else None
    z1 = z_eval(t + dt) if z_eval else None
    k1 = _advection_rhs(v, z0, cfg)
    k2 = _advection_rhs(v + (0.5 * dt) * k1, zm, cfg)
    k3 = _advection_rhs(v + (0.5 * dt) * k2, zm, cfg)
    k4 = _advection_rhs(v + dt * k3, z1, cfg)
    return v + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def solve_euler_with_drift(v0: SpectralField, z_eval, t0: float,
                           out_times, cfg: SolverConfig | None = None):
    """Integrate the drifted Euler system from t0 over the requested times.

    ``z_eval`` is a callable t -> SpectralField (or None for no drift);
    ``out_times`` must be increasing with out_times[0] == t0.  The initial
    field is returned unchanged as the first sample.  Returns (fields,
    diagnostics) where diagnostics records the CFL step count, an embedded
    step-doubling truncation estimate, and the kinetic energy of v+Z at
    each output time.
    """
    cfg = cfg or SolverConfig()
    out_times = np.asarray(out_times, dtype=float)
    if abs(out_times[0] - t0) > 1e-12:
        raise ValueError("out_times must start at t0")
    v = v0
    fields = [v0]
    n_steps = 0
    trunc = 0.0
    energies = [_kinetic(v0, z_eval, t0)]
    first = True
    for a, b in zip(out_times[:-1], out_times[1:]):
        span = b - a
        dt_max = _cfl_dt(v, z_eval(a) if z_eval else None, cfg)
        n_sub = max(1, int(np.ceil(span / dt_max)))
        dt = span / n_sub
        t = a
        for _ in range(n_sub):
            if first:
                coarse = _rk4_step(v, z_eval, t, dt, cfg)
                half = _rk4_step(v, z_eval, t, dt / 2, cfg)
                fine = _rk4_step(half, z_eval, t + dt / 2, dt / 2, cfg)
                trunc = c0_norm(coarse - fine) / dt  # per unit time
                v = fine
                first = False
            else:
                v = _rk4_step(v, z_eval, t, dt, cfg)
            t += dt
            n_steps += 1
            if c0_norm(v) > cfg.blowup_guard:
                raise RuntimeError(
                    f"field magnitude blow-up at step {n_steps} (t={t:.4f})")
        fields.append(v)
        energies.append(_kinetic(v, z_eval, b))
    diag = {"steps": n_steps, "truncation_per_time": float(trunc),
            "energy": np.array(energies)}
    return fields, diag


def _kinetic(v: SpectralField, z_eval, t: float) -> float:
    from .fields import inner
    u = v if z_eval is None else v + z_eval(t)
    return inner(u, u)


# ---------------------------------------------------------------------------
# off-grid evaluation of band-limited fields
# ---------------------------------------------------------------------------

class SpectralInterpolant:
    """Padded-FFT upsampling plus separable Lagrange interpolation.

    Exact nonuniform spectral evaluation is quadratic in grid size; for the
    smooth advecting velocities here, zero-padded refinement by
    ``pad_factor`` followed by an ``order``-point periodic Lagrange stencil
    reproduces band-limited fields to ~(pi k_max / (pad*n))^order.
    """

    def __init__(self, f: SpectralField, pad_factor: int = 4, order: int = 6):
        self.order = order
        n = f.grid.n
        self.nf = n * pad_factor
        c = f.coeffs
        ncomp = c.shape[0]
        big = np.zeros((ncomp, self.nf, self.nf, self.nf // 2 + 1),
                       dtype=complex)
        h = n // 2
        # copy all modes except the (empty for band-limited fields) Nyquist
        # planes; negative frequencies go to the end of the padded axes
        src = np.r_[0:h, n - h + 1:n]
        dst = np.r_[0:h, self.nf - h + 1:self.nf]
        big[np.ix_(range(ncomp), dst, dst, range(h))] = \
            c[np.ix_(range(ncomp), src, src, range(h))]
        self.fine = _fft.irfftn(big * self.nf**3, s=(self.nf,) * 3,
                                axes=(1, 2, 3))

    def __call__(self, points: np.ndarray, order: int | None = None) -> np.ndarray:
        """Evaluate at points of shape (3, ...); returns (ncomp, ...)."""
        shape = points.shape[1:]
        p = points.reshape(3, -1) % 1.0
        nf, order = self.nf, (order or self.order)
        x = p * nf
        base = np.floor(x).astype(np.int64) - (order // 2 - 1)
        frac = x - np.floor(x)
        # Lagrange weights at offsets 0..order-1 for target (order//2-1)+frac
        offs = np.arange(order, dtype=float)
        t = (order // 2 - 1) + frac  # (3, N)
        w = np.ones((3, order, p.shape[1]))
        for i in range(order):
            for j in range(order):
                if i == j:
                    continue
                w[:, i, :] *= (t - offs[j]) / (offs[i] - offs[j])
        flat = self.fine.reshape(self.fine.shape[0], -1)
        out = np.zeros((self.fine.shape[0], p.shape[1]))
        for i in range(order):
            ix = (base[0] + i) % nf
            wx = w[0, i]
            for j in range(order):
                iy = (base[1] + j) % nf
                wxy = wx * w[1, j]
                row = (ix * nf + iy) * nf
                acc = np.zeros_like(out)
                for k in range(order):
                    iz = (base[2] + k) % nf
                    acc += w[2, k] * flat[:, row + iz]
                out += wxy * acc
        return out.reshape((self.fine.shape[0],) + shape)


# ---------------------------------------------------------------------------
# flow maps
# ---------------------------------------------------------------------------

class FlowMap:
    """Periodic flow map of a velocity, anchored at ``anchor_time``.

    Stores the displacement from identity at each requested time; gradients
    are spectral in the displacement, so volume preservation of the
    divergence-free advection is inherited to rounding.
    """

    def __init__(self, grid: GridSpec, anchor_time: float):
        self.grid = grid
        self.anchor_time = float(anchor_time)
        self.times = [float(anchor_time)]
        self.displacements = [np.zeros((3, grid.n, grid.n, grid.n))]

    def index_of(self, t: float) -> int:
        arr = np.asarray(self.times)
        i = int(np.argmin(np.abs(arr - t)))
        if abs(arr[i] - t) > 1e-9:
            raise KeyError(f"flow map not sampled at t={t}")
        return i

    def positions(self, i: int) -> np.ndarray:
        return (self.grid.mesh() + self.displacements[i]) % 1.0

    def grad(self, i: int) -> np.ndarray:
        """(3, 3, n, n, n) array of d_j Phi_i components."""
        from .fields import gradient_tensor
        disp = from_grid(self.displacements[i], self.grid, "vector3")
        g = gradient_tensor(disp)
        for a in range(3):
            g[a, a] += 1.0
        return g

    def inv_grad(self, i: int) -> np.ndarray:
        return _invert_3x3(self.grad(i))

    def det_grad(self, i: int) -> np.ndarray:
        return _det_3x3(self.grad(i))


def _det_3x3(m: np.ndarray) -> np.ndarray:
    return (m[0, 0] * (m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1])
            - m[0, 1] * (m[1, 0] * m[2, 2] - m[1, 2] * m[2, 0])
            + m[0, 2] * (m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]))


def _invert_3x3(m: np.ndarray) -> np.ndarray:
    det = _det_3x3(m)
    adj = np.empty_like(m)
    adj[0, 0] = m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
    adj[0, 1] = m[0, 2] * m[2, 1] - m[0, 1] * m[2, 2]
    adj[0, 2] = m[0, 1] * m[1, 2] - m[0, 2] * m[1, 1]
    adj[1, 0] = m[1, 2] * m[2, 0] - m[1, 0] * m[2, 2]
    adj[1, 1] = m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
    adj[1, 2] = m[0, 2] * m[1, 0] - m[0, 0] * m[1, 2]
    adj[2, 0] = m[1, 0] * m[2, 1] - m[1, 1] * m[2, 0]
    adj[2, 1] = m[0, 1] * m[2, 0] - m[0, 0] * m[2, 1]
    adj[2, 2] = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    return adj / det


def solve_flow_map(u_eval, times, grid: GridSpec,
                   cfg: SolverConfig | None = None,
                   n_substeps: int | None = None) -> FlowMap:
    """Backward-characteristic flow map of u on the given time samples.

    ``u_eval(t)`` returns the advecting velocity; ``times[0]`` is the
    anchor where the map is the identity.  Each new sample composes the
    previous map with a one-step backward characteristic solved by RK4 and
    high-order periodic interpolation.  Substeps are chosen so each RK4
    step sees dt*||grad u|| <= 0.1 (keeps the volume defect of the
    non-conservative integrator near rounding over admissible spans).
    """
    cfg = cfg or SolverConfig()
    times = np.asarray(times, dtype=float)
    fm = FlowMap(grid, times[0])
    mesh = grid.mesh()
    cache = {}
    if n_substeps is None:
        from .fields import gradient_tensor
        gmax = float(np.abs(gradient_tensor(u_eval(times[0]))).max())
        span = float(np.max(np.diff(times))) if len(times) > 1 else 0.0
        n_substeps = max(1, int(np.ceil(span * max(gmax, 1e-12) / 0.1)))

    def interp_at(t):
        key = round(t, 12)
        if key not in cache:
            cache[key] = SpectralInterpolant(u_eval(t), cfg.pad_factor,
                                             cfg.interp_points)
            if len(cache) > 8:
                cache.pop(next(iter(cache)))
        return cache[key]

    for a, b in zip(times[:-1], times[1:]):
        # backward characteristics from t=b to t=a for every grid node
        pts = mesh.copy()
        dt = (b - a) / n_substeps
        t = b
        for _ in range(n_substeps):
            k1 = -interp_at(t)(pts)
            mid = interp_at(t - dt / 2)
            k2 = -mid((pts + (dt / 2) * k1) % 1.0)
            k3 = -mid((pts + (dt / 2) * k2) % 1.0)
            k4 = -interp_at(t - dt)((pts + dt * k3) % 1.0)
            pts = (pts + (dt / 6) * (k1 + 2 * k2 + 2 * k3 + k4)) % 1.0
            t -= dt
        # compose with the stored map: Phi(b, x) = Phi(a, psi(x)); the
        # displacement is smooth but not band-limited, so use a wider stencil
        prev = fm.displacements[-1]
        disp_interp = SpectralInterpolant(
            from_grid(prev, grid, "vector3"), cfg.pad_factor,
            cfg.interp_points)
        new_disp = disp_interp(pts, order=cfg.interp_points + 2) \
            + _wrap(pts - mesh)
        fm.times.append(float(b))
        fm.displacements.append(new_disp)
    return fm


def _wrap(d: np.ndarray) -> np.ndarray:
    """Periodic wrap of displacements into [-1/2, 1/2)."""
    return (d + 0.5) % 1.0 - 0.5


# ---------------------------------------------------------------------------
# time-grid helpers shared with the scheme
# ---------------------------------------------------------------------------

def time_derivative(series, dt: float):
    """Second-order finite differences of a field series (central inside,
    one-sided at the ends)."""
    n = len(series)
    if n < 3:
        raise ValueError("need at least three samples")
    out = []
    for i in range(n):
        if i == 0:
            d = (-1.5 * series[0].coeffs + 2.0 * series[1].coeffs
                 - 0.5 * series[2].coeffs)
        elif i == n - 1:
            d = (1.5 * series[-1].coeffs - 2.0 * series[-2].coeffs
                 + 0.5 * series[-3].coeffs)
        else:
            d = 0.5 * (series[i + 1].coeffs - series[i - 1].coeffs)
        out.append(SpectralField(series[0].grid, series[0].rank, d / dt))
    return out


def momentum_residual(v_series, z_series, stress_series, dt: float,
                      cfg: SolverConfig | None = None):
    """Residual of  P[d_t v + div((v+z) (x) (v+z)) - div R]  on the grid.

    Returns (per-time residual sup-norms, finite-difference tolerance
    estimate).  The tolerance is the size of the third-difference remainder
    of the time derivative, i.e. what the discretization itself allows.
    """
    cfg = cfg or SolverConfig()
    dv = time_derivative(v_series, dt)
    resid = []
    for i, v in enumerate(v_series):
        z = z_series[i] if z_series is not None else None
        adv = -1.0 * _advection_rhs(v, z, cfg)   # +P div((v+z)(x)(v+z))
        total = dv[i] + adv
        if stress_series is not None:
            total = total - leray_project(differential(stress_series[i], "div"))
        resid.append(c0_norm(total))
    # FD error estimate: ||d^3 v / dt^3|| * dt^2 / 6 via third differences
    tol = 0.0
    for i in range(1, len(v_series) - 2):
        third = (v_series[i + 2].coeffs - 3 * v_series[i + 1].coeffs
                 + 3 * v_series[i].coeffs - v_series[i - 1].coeffs)
        f = SpectralField(v_series[0].grid, v_series[0].rank, third / dt**3)
        tol = max(tol, c0_norm(f) * dt**2 / 6.0)
    return np.array(resid), float(tol)
