"""Band-limited real fields on [0,1)^3 stored as Fourier coefficients.

Normalization: a field with coefficient array ``c`` represents
``f(x) = sum_k c_k exp(2*pi*i k.x)`` so that ``c_0`` is the spatial mean and
Parseval reads ``integral |f|^2 dx = sum_k |c_k|^2`` (sum over the full
integer lattice; storage is the rfftn half-spectrum, the other half is the
complex conjugate).  Forward/inverse grid transforms are exactly unitary
under this convention.
"""

import struct
import warnings

import numpy as np
from scipy import fft as _fft

from .grids import GridSpec

RANK_COMPONENTS = {"scalar": 1, "vector3": 3, "symtensor3x3": 6}

# component order of the 6 stored entries of a symmetric 3x3 tensor
SYM_INDEX = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))
SYM_SLOT = {(0, 0): 0, (0, 1): 1, (1, 0): 1, (0, 2): 2, (2, 0): 2,
            (1, 1): 3, (1, 2): 4, (2, 1): 4, (2, 2): 5}
# multiplicity of each stored component inside the full tensor
SYM_WEIGHT = np.array([1.0, 2.0, 2.0, 1.0, 2.0, 1.0])

_TWO_PI_I = 2.0j * np.pi


class SpectralField:
    """Real scalar/vector/symmetric-tensor field, held spectrally."""

    __slots__ = ("grid", "rank", "coeffs", "mean_zero", "_samples")

    def __init__(self, grid: GridSpec, rank: str, coeffs: np.ndarray,
                 mean_zero: bool = False):
        if rank not in RANK_COMPONENTS:
            raise ValueError(f"unknown rank {rank!r}")
        ncomp = RANK_COMPONENTS[rank]
        n = grid.n
        if coeffs.shape != (ncomp, n, n, n // 2 + 1):
            raise ValueError(
                f"coefficient array has shape {coeffs.shape}, expected "
                f"{(ncomp, n, n, n // 2 + 1)}")
        self.grid = grid
        self.rank = rank
        self.coeffs = coeffs
        self.mean_zero = mean_zero
        self._samples = None  # exact grid samples when built from them
        if mean_zero:
            self.coeffs[:, 0, 0, 0] = 0.0

    @property
    def ncomp(self) -> int:
        return RANK_COMPONENTS[self.rank]

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.rank, self.coeffs.copy(),
                             self.mean_zero)

    # -- light arithmetic (same grid and rank) --------------------------
    def __add__(self, other):
        _check_same(self, other)
        return SpectralField(self.grid, self.rank, self.coeffs + other.coeffs,
                             self.mean_zero and other.mean_zero)

    def __sub__(self, other):
        _check_same(self, other)
        return SpectralField(self.grid, self.rank, self.coeffs - other.coeffs,
                             self.mean_zero and other.mean_zero)

    def __mul__(self, scalar):
        return SpectralField(self.grid, self.rank, self.coeffs * scalar,
                             self.mean_zero)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    # -- single-mode access ---------------------------------------------
    def get_mode(self, k) -> np.ndarray:
        """Coefficient vector (one entry per component) at wavevector k."""
        kx, ky, kz = (int(v) for v in k)
        n = self.grid.n
        if kz < 0:
            return np.conj(self.get_mode((-kx, -ky, -kz)))
        return self.coeffs[:, kx % n, ky % n, kz]

    def set_mode(self, k, values) -> None:
        """Set the coefficient at k (and its Hermitian partner)."""
        self._samples = None
        kx, ky, kz = (int(v) for v in k)
        n = self.grid.n
        if max(abs(kx), abs(ky), abs(kz)) >= n // 2:
            raise ValueError("mode outside the unambiguous half-spectrum")
        values = np.asarray(values, dtype=complex)
        if kz < 0:
            kx, ky, kz, values = -kx, -ky, -kz, np.conj(values)
        self.coeffs[:, kx % n, ky % n, kz] = values
        if kz == 0 and (kx, ky) != (0, 0):
            self.coeffs[:, (-kx) % n, (-ky) % n, 0] = np.conj(values)

    def hermitian_defect(self) -> float:
        """Max violation of c(-k) = conj(c(k)) on the self-conjugate planes."""
        out = 0.0
        for plane in (0, self.grid.n // 2):
            p = self.coeffs[:, :, :, plane]
            q = np.conj(p[:, _reflect(self.grid.n), :][:, :, _reflect(self.grid.n)])
            out = max(out, float(np.max(np.abs(p - q))))
        return out


def _reflect(n: int):
    idx = (-np.arange(n)) % n
    return idx


def _check_same(a: SpectralField, b: SpectralField):
    if a.grid != b.grid or a.rank != b.rank:
        raise ValueError("fields live on different grids or ranks")


# ---------------------------------------------------------------------------
# grid transforms
# ---------------------------------------------------------------------------

def zeros(grid: GridSpec, rank: str, mean_zero: bool = False) -> SpectralField:
    ncomp = RANK_COMPONENTS[rank]
    c = np.zeros((ncomp, grid.n, grid.n, grid.n // 2 + 1), dtype=complex)
    return SpectralField(grid, rank, c, mean_zero)


def from_grid(samples: np.ndarray, grid: GridSpec, rank: str,
              mean_zero: bool = False) -> SpectralField:
    """Forward transform of real grid samples (x-,y-,z-indexed)."""
    ncomp = RANK_COMPONENTS[rank]
    samples = np.asarray(samples, dtype=float)
    if rank == "scalar" and samples.ndim == 3:
        samples = samples[None]
    n = grid.n
    if samples.shape != (ncomp, n, n, n):
        raise ValueError(
            f"sample array has shape {samples.shape}, expected {(ncomp, n, n, n)}")
    coeffs = _fft.rfftn(samples, axes=(1, 2, 3)) / grid.n**3
    out = SpectralField(grid, rank, coeffs, mean_zero)
    if not mean_zero:
        out._samples = samples.copy()
    return out


def to_grid(f: SpectralField) -> np.ndarray:
    """Real grid samples; scalar fields come back as a bare (n,n,n) array.

    Fields constructed from grid samples return those samples verbatim, so
    the snapshot file format round-trips bit-exactly.
    """
    if f._samples is not None:
        out = f._samples.copy()
    else:
        n = f.grid.n
        out = _fft.irfftn(f.coeffs * n**3, s=(n, n, n), axes=(1, 2, 3))
    return out[0] if f.rank == "scalar" else out


# ---------------------------------------------------------------------------
# differential operators (exact Fourier multipliers 2*pi*i*k)
# ---------------------------------------------------------------------------

def _dcomp(grid: GridSpec, comp: np.ndarray, axis: int) -> np.ndarray:
    k = grid.wavenumbers()[axis]
    return _TWO_PI_I * k * comp


def differential(f: SpectralField, op: str) -> SpectralField:
    """grad (scalar -> vector3), div (vector3 -> scalar, symtensor3x3 ->
    vector3) or curl (vector3 -> vector3)."""
    g = f.grid
    if op == "grad":
        if f.rank != "scalar":
            raise ValueError("grad expects a scalar field")
        c = np.stack([_dcomp(g, f.coeffs[0], a) for a in range(3)])
        return SpectralField(g, "vector3", c, mean_zero=True)
    if op == "div":
        if f.rank == "vector3":
            c = sum(_dcomp(g, f.coeffs[a], a) for a in range(3))
            return SpectralField(g, "scalar", c[None], mean_zero=True)
        if f.rank == "symtensor3x3":
            rows = []
            for i in range(3):
                rows.append(sum(_dcomp(g, f.coeffs[SYM_SLOT[(i, j)]], j)
                                for j in range(3)))
            return SpectralField(g, "vector3", np.stack(rows), mean_zero=True)
        raise ValueError("div expects a vector3 or symtensor3x3 field")
    if op == "curl":
        if f.rank != "vector3":
            raise ValueError("curl expects a vector3 field")
        cx = _dcomp(g, f.coeffs[2], 1) - _dcomp(g, f.coeffs[1], 2)
        cy = _dcomp(g, f.coeffs[0], 2) - _dcomp(g, f.coeffs[2], 0)
        cz = _dcomp(g, f.coeffs[1], 0) - _dcomp(g, f.coeffs[0], 1)
        return SpectralField(g, "vector3", np.stack([cx, cy, cz]),
                             mean_zero=True)
    raise ValueError(f"unknown differential op {op!r}")


def gradient_tensor(v: SpectralField) -> np.ndarray:
    """Grid samples of the full Jacobian d_j v_i, shape (3, 3, n, n, n)."""
    if v.rank != "vector3":
        raise ValueError("gradient_tensor expects a vector3 field")
    g = v.grid
    rows = []
    for i in range(3):
        c = np.stack([_dcomp(g, v.coeffs[i], j) for j in range(3)])
        rows.append(_fft.irfftn(c * g.n**3, s=(g.n,) * 3, axes=(1, 2, 3)))
    return np.stack(rows)


def laplacian_inverse(f: SpectralField) -> SpectralField:
    """(-Lap)^{-1} acting on the mean-free part; the mean is dropped."""
    g = f.grid
    ksq = g.k_squared().astype(float)
    mult = np.zeros_like(ksq)
    nz = ksq > 0
    mult[nz] = 1.0 / (4.0 * np.pi**2 * ksq[nz])
    return SpectralField(g, f.rank, f.coeffs * mult, mean_zero=True)


# ---------------------------------------------------------------------------
# projections and inverse operators
# ---------------------------------------------------------------------------

def leray_project(v: SpectralField) -> SpectralField:
    """Project onto divergence-free fields: mode action Id - khat khat^T,
    the mean component passes through unchanged."""
    if v.rank != "vector3":
        raise ValueError("leray_project expects a vector3 field")
    g = v.grid
    kx, ky, kz = g.wavenumbers()
    ksq = g.k_squared().astype(float)
    ksq_safe = np.where(ksq == 0, 1.0, ksq)
    kdotv = (kx * v.coeffs[0] + ky * v.coeffs[1] + kz * v.coeffs[2]) / ksq_safe
    c = np.stack([v.coeffs[0] - kx * kdotv,
                  v.coeffs[1] - ky * kdotv,
                  v.coeffs[2] - kz * kdotv])
    return SpectralField(g, "vector3", c, v.mean_zero)


def divergence_defect(v: SpectralField) -> float:
    """max |div v| relative to max |v| (0 for v = 0)."""
    dv = c0_norm(differential(v, "div"))
    scale = c0_norm(v)
    return dv / scale if scale > 0 else 0.0


def biot_savart(v: SpectralField, tol: float = 1e-10) -> SpectralField:
    """Vector potential b = (-Lap)^{-1} curl v with curl b = v, div b = 0.

    Preconditions (checked to ``tol``, relative): v has zero mean and is
    divergence-free.
    """
    if v.rank != "vector3":
        raise ValueError("biot_savart expects a vector3 field")
    scale = c0_norm(v)
    if scale > 0:
        mean = np.abs(v.coeffs[:, 0, 0, 0]).max()
        if mean > tol * scale:
            raise ValueError("biot_savart precondition violated: field has "
                             f"nonzero mean ({mean:.3e})")
        if divergence_defect(v) > tol:
            raise ValueError("biot_savart precondition violated: field is "
                             "not divergence-free")
    return laplacian_inverse(differential(v, "curl"))


def inverse_divergence(v: SpectralField) -> SpectralField:
    """Right inverse of div producing symmetric trace-free tensors.

    Acts on the mean-free part of v (the mean is removed first), so
    div(inverse_divergence(v)) = v - mean(v).
    """
    if v.rank != "vector3":
        raise ValueError("inverse_divergence expects a vector3 field")
    g = v.grid
    kx, ky, kz = g.wavenumbers()
    ksq = g.k_squared().astype(float)
    ksq_safe = np.where(ksq == 0, 1.0, ksq)
    # d_j Lap^{-1} acting on component c:  mult_j * c  with
    # mult_j = (2 pi i k_j) * (-1/(4 pi^2 |k|^2)) = -i k_j / (2 pi |k|^2)
    def dinv(j, c):
        k = (kx, ky, kz)[j]
        return (-1j / (2.0 * np.pi)) * k / ksq_safe * c

    w = [c.copy() for c in v.coeffs]
    for c in w:
        c[0, 0, 0] = 0.0
    s = sum(dinv(j, w[j]) for j in range(3))  # div Lap^{-1} v
    out = np.empty((6,) + w[0].shape, dtype=complex)
    for slot, (i, j) in enumerate(SYM_INDEX):
        t = dinv(i, w[j]) + dinv(j, w[i])
        if i == j:
            t = t - 0.5 * s
        t = t - 0.5 * dinv(i, _dcomp(g, s, j))
        out[slot] = t
    return SpectralField(g, "symtensor3x3", out, mean_zero=True)


# ---------------------------------------------------------------------------
# band projection, mollification, dealiasing
# ---------------------------------------------------------------------------

def band_project(f: SpectralField, mode: str, cutoff: float) -> SpectralField:
    """Sharp spectral truncation on |k|.

    ``leq`` keeps |k| <= cutoff, ``geq`` keeps the complement |k| > cutoff,
    so the two modes sum to the identity.
    """
    g = f.grid
    if cutoff > g.nyquist:
        warnings.warn(f"band cutoff {cutoff} beyond Nyquist {g.nyquist}; "
                      "clamping")
        cutoff = float(g.nyquist)
    ksq = g.k_squared()
    keep = ksq <= cutoff * cutoff + 1e-9
    if mode == "leq":
        mask = keep
    elif mode == "geq":
        mask = ~keep
    else:
        raise ValueError("mode must be 'leq' or 'geq'")
    return SpectralField(g, f.rank, f.coeffs * mask,
                         f.mean_zero or mode == "geq")


def mollifier_multiplier(grid: GridSpec, ell: float) -> np.ndarray:
    """rfftn multiplier of the rescaled unit-mass bump kernel phi_ell.

    The kernel exp(-1/(1-|x/ell|^2)) on the ball |x| < ell is sampled on the
    grid (periodically wrapped) and normalized so its discrete integral is
    one; convolution is then exact for grid-sampled fields and constants are
    preserved.
    """
    if not 0.0 < ell < 1.0:
        raise ValueError("mollification length must lie in (0, 1)")
    n = grid.n
    if ell < grid.dx:
        warnings.warn(f"mollifier width {ell} below one grid cell (1/{n}); "
                      "kernel under-resolved")
    x = grid.axes()
    d = np.minimum(x, 1.0 - x)  # distance to 0 on the circle
    r2 = (d[:, None, None] ** 2 + d[None, :, None] ** 2
          + d[None, None, :] ** 2) / ell**2
    kern = np.zeros((n, n, n))
    inside = r2 < 1.0
    kern[inside] = np.exp(-1.0 / (1.0 - r2[inside]))
    kern *= n**3 / kern.sum()
    return _fft.rfftn(kern).real / n**3


def mollify_space(f: SpectralField, ell: float) -> SpectralField:
    """Exact periodic convolution with the unit-mass bump kernel phi_ell."""
    mult = mollifier_multiplier(f.grid, ell)
    return SpectralField(f.grid, f.rank, f.coeffs * mult, f.mean_zero)


def dealias(f: SpectralField) -> SpectralField:
    """Zero all modes with any |k_i| beyond the 2/3 (per-axis) cutoff."""
    g = f.grid
    kmax = int(np.floor(g.dealias_fraction * g.nyquist))
    kx, ky, kz = g.wavenumbers()
    mask = (np.abs(kx) <= kmax) & (np.abs(ky) <= kmax) & (np.abs(kz) <= kmax)
    return SpectralField(g, f.rank, f.coeffs * mask, f.mean_zero)


# ---------------------------------------------------------------------------
# inner products and norms
# ---------------------------------------------------------------------------

def _pair_weights(grid: GridSpec) -> np.ndarray:
    """Weight 2 for modes whose conjugate partner is implicit, else 1."""
    n = grid.n
    w = np.full(n // 2 + 1, 2.0)
    w[0] = 1.0
    w[n // 2] = 1.0
    return w[None, None, :]


def inner(f: SpectralField, g: SpectralField) -> float:
    """L^2 inner product; for tensors this is the integrated Frobenius
    pairing (off-diagonal components counted twice)."""
    _check_same(f, g)
    w = _pair_weights(f.grid)
    comp = np.real(f.coeffs * np.conj(g.coeffs)) * w
    total = comp.sum(axis=(1, 2, 3))
    if f.rank == "symtensor3x3":
        total = total * SYM_WEIGHT
    return float(total.sum())


def l2_norm(f: SpectralField) -> float:
    return float(np.sqrt(max(inner(f, f), 0.0)))


def c0_norm(f: SpectralField) -> float:
    """Grid sup-norm max over components (exact for the stored samples)."""
    return float(np.max(np.abs(to_grid(f))))


def grid_l2_norm_squared(samples: np.ndarray, rank: str = "vector3") -> float:
    """Quadrature of integral |f|^2 dx from grid samples."""
    n3 = samples.shape[-1] ** 3
    if rank == "symtensor3x3":
        comp = (samples**2 * SYM_WEIGHT[:, None, None, None]).sum()
    else:
        comp = (samples**2).sum()
    return float(comp) / n3


# ---------------------------------------------------------------------------
# symmetric-tensor helpers
# ---------------------------------------------------------------------------

def sym_to_full(samples6: np.ndarray) -> np.ndarray:
    """(6, ...) component array -> (3, 3, ...) full symmetric tensor."""
    out = np.empty((3, 3) + samples6.shape[1:], dtype=samples6.dtype)
    for i in range(3):
        for j in range(3):
            out[i, j] = samples6[SYM_SLOT[(i, j)]]
    return out


def full_to_sym(full: np.ndarray) -> np.ndarray:
    """(3, 3, ...) symmetric tensor -> (6, ...) component array."""
    return np.stack([full[i, j] for (i, j) in SYM_INDEX])


def deviatoric(f: SpectralField) -> SpectralField:
    """Remove the pointwise trace of a symmetric tensor field."""
    if f.rank != "symtensor3x3":
        raise ValueError("deviatoric expects a symtensor3x3 field")
    c = f.coeffs.copy()
    tr = (c[0] + c[3] + c[5]) / 3.0
    for slot in (0, 3, 5):
        c[slot] -= tr
    return SpectralField(f.grid, "symtensor3x3", c, f.mean_zero)


def trace_defect(f: SpectralField) -> float:
    """Grid sup-norm of the pointwise trace of a symmetric tensor field."""
    s = to_grid(f)
    return float(np.max(np.abs(s[0] + s[3] + s[5])))


def outer_sym(a: np.ndarray, b: np.ndarray, traceless: bool = False) -> np.ndarray:
    """Symmetric part of the outer product of two (3,n,n,n) grid fields,
    returned in 6-component layout; optionally with the trace removed."""
    out = np.stack([0.5 * (a[i] * b[j] + a[j] * b[i]) for (i, j) in SYM_INDEX])
    if traceless:
        tr = (out[0] + out[3] + out[5]) / 3.0
        for slot in (0, 3, 5):
            out[slot] = out[slot] - tr
    return out


# ---------------------------------------------------------------------------
# field snapshot files
# ---------------------------------------------------------------------------

_MAGIC = b"CILABFLD"
_VERSION = 1
_RANK_CODE = {"scalar": 0, "vector3": 1, "symtensor3x3": 2}
_RANK_NAME = {v: k for k, v in _RANK_CODE.items()}


def save_field(f: SpectralField, path) -> None:
    """Write a snapshot: 64-byte header then little-endian float64 grid
    samples, x-fastest within each component, components in order."""
    samples = to_grid(f)
    if f.rank == "scalar":
        samples = samples[None]
    header = _MAGIC + struct.pack("<IIBB", _VERSION, f.grid.n,
                                  _RANK_CODE[f.rank], int(f.mean_zero))
    header += b"\x00" * (64 - len(header))
    with open(path, "wb") as fh:
        fh.write(header)
        for comp in samples:
            fh.write(np.ascontiguousarray(comp.T, dtype="<f8").tobytes())


def load_field(path, grid: GridSpec | None = None) -> SpectralField:
    with open(path, "rb") as fh:
        header = fh.read(64)
        if header[:8] != _MAGIC:
            raise ValueError("not a field snapshot file")
        version, n, rank_code, mean_zero = struct.unpack("<IIBB", header[8:18])
        if version != _VERSION:
            raise ValueError(f"unsupported snapshot version {version}")
        rank = _RANK_NAME[rank_code]
        ncomp = RANK_COMPONENTS[rank]
        raw = np.frombuffer(fh.read(ncomp * n**3 * 8), dtype="<f8")
    samples = raw.reshape(ncomp, n, n, n).transpose(0, 3, 2, 1)
    g = grid if grid is not None else GridSpec(n)
    if g.n != n:
        raise ValueError(f"snapshot grid {n} does not match requested {g.n}")
    return from_grid(samples, g, rank, mean_zero=bool(mean_zero))
