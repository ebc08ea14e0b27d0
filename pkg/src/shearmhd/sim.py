"""Pseudo-spectral integration of the sheared-frame perturbation system.

Unknowns are the velocity and magnetic perturbations (v, b) around Couette
flow plus a constant horizontal field of strength alpha, in the frame
following the shear characteristics:

    dv/dt = nu Lap_t v + alpha dx b - v2 e1 + 2 dx invLap_t grad_t v2
            + P_t(b . grad_t b - v . grad_t v)
    db/dt = kappa Lap_t b + alpha dx v + b2 e1 + b . grad_t v - v . grad_t b

with P_t the moving-frame Leray projection absorbing the pressure.  The
dissipative symbols have a closed antiderivative in t, so time stepping uses
an exact integrating factor with classical RK4 on the remaining bounded
terms.  Nonlinear products are formed in physical space and dealiased by the
2/3 rule.
"""

import struct
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .linear import PhysParams
from .spectral import (
    GridSpec,
    SpectralField,
    divergence_defect,
    project_divfree,
    sobolev_weight,
)
from .weights import WeightParams, eval_A, eval_chi


class ResolutionOverflow(RuntimeError):
    """Nonlinear energy piled up against the dealiasing band."""


@dataclass
class State:
    """Spectral coefficients of (v1, v2, b1, b2) at time t."""

    grid: GridSpec
    params: PhysParams
    t: float
    v1: np.ndarray
    v2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray

    def copy(self) -> "State":
        return State(
            self.grid, self.params, self.t,
            self.v1.copy(), self.v2.copy(), self.b1.copy(), self.b2.copy(),
        )

    def fields(self):
        return self.v1, self.v2, self.b1, self.b2


@dataclass
class PVars:
    """Scalar unknowns: curl-based on k != 0, first components on the x average."""

    p1: SpectralField
    p2: SpectralField


@dataclass
class DiagnosticsRecord:
    t: float
    E_main: float
    HN_neq: float
    HN_eq: float
    nonlinear_flux: float
    ED_v_cum: float
    ED_b_cum: float
    growth_L: float


# ---------------------------------------------------------------------------
# spatial operators
# ---------------------------------------------------------------------------

def _sigma(grid: GridSpec, t: float):
    K = grid.kk
    return K, grid.xixi - K * t


def diss_antiderivative(grid: GridSpec, t: float) -> np.ndarray:
    """int_0^t (k^2 + (xi - k tau)^2) dtau, elementwise (polynomial, all k)."""
    K = grid.kk
    XI = grid.xixi
    return (K ** 2 + XI ** 2) * t - K * XI * t ** 2 + K ** 2 * t ** 3 / 3.0


def _to_phys(grid: GridSpec, c: np.ndarray) -> np.ndarray:
    return np.fft.ifft2(c).real * (grid.nx * grid.ny)


def _to_spec_dealiased(grid: GridSpec, phys: np.ndarray) -> np.ndarray:
    c = np.fft.fft2(phys) / (grid.nx * grid.ny)
    return np.where(grid.dealias_mask, c, 0.0)


def advect(grid: GridSpec, t: float, a1: np.ndarray, a2: np.ndarray, c: np.ndarray) -> np.ndarray:
    """(a . grad_t) c computed pseudo-spectrally with dealiasing."""
    K, XIT = _sigma(grid, t)
    dxc = _to_phys(grid, 1j * K * c)
    dyc = _to_phys(grid, 1j * XIT * c)
    pa1 = _to_phys(grid, a1)
    pa2 = _to_phys(grid, a2)
    return _to_spec_dealiased(grid, pa1 * dxc + pa2 * dyc)


def rhs_nonstiff(state: State, t: float, linear_only: bool = False):
    """All terms except the diagonal dissipation (handled by the integrating factor).

    The Leray projection is applied to the nonlinear velocity forcing; the
    printed linear terms carry exactly the divergence needed to follow the
    time-dependent incompressibility constraint and are left unprojected.
    """
    grid = state.grid
    params = state.params
    K, XIT = _sigma(grid, t)
    mag2 = K ** 2 + XIT ** 2
    with np.errstate(divide="ignore"):
        ilap = np.where(mag2 > 0, -1.0 / np.where(mag2 > 0, mag2, 1.0), 0.0)
    v1, v2, b1, b2 = state.fields()

    lift = 2.0 * (1j * K) * ilap * v2
    dv1 = params.alpha * 1j * K * b1 - v2 + (1j * K) * lift
    dv2 = params.alpha * 1j * K * b2 + (1j * XIT) * lift
    db1 = params.alpha * 1j * K * v1 + b2
    db2 = params.alpha * 1j * K * v2

    if not linear_only:
        # share physical-space transforms: 4 field transforms + 8 gradients
        pv = [_to_phys(grid, c) for c in (v1, v2)]
        pb = [_to_phys(grid, c) for c in (b1, b2)]
        grads = {}
        for name, c in (("v1", v1), ("v2", v2), ("b1", b1), ("b2", b2)):
            grads[name] = (
                _to_phys(grid, 1j * K * c),
                _to_phys(grid, 1j * XIT * c),
            )

        def adv(a, cname):
            gx, gy = grads[cname]
            return _to_spec_dealiased(grid, a[0] * gx + a[1] * gy)

        n_v1 = adv(pb, "b1") - adv(pv, "v1")
        n_v2 = adv(pb, "b2") - adv(pv, "v2")
        n_v1, n_v2 = project_divfree(n_v1, n_v2, grid, t)
        dv1 = dv1 + n_v1
        dv2 = dv2 + n_v2
        db1 = db1 + adv(pb, "v1") - adv(pv, "b1")
        db2 = db2 + adv(pb, "v2") - adv(pv, "b2")

    return dv1, dv2, db1, db2


def step(state: State, dt: float, linear_only: bool = False) -> State:
    """One integrating-factor RK4 step; re-projects both fields afterwards."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    if dt == 0.0:
        return state.copy()
    grid = state.grid
    nu, kappa = state.params.nu, state.params.kappa
    t0 = state.t
    phi0 = diss_antiderivative(grid, t0)
    dphi_h = diss_antiderivative(grid, t0 + 0.5 * dt) - phi0
    dphi_f = diss_antiderivative(grid, t0 + dt) - phi0

    def decays(mu):
        Eh = np.exp(-mu * dphi_h)
        Ef = np.exp(-mu * dphi_f)
        Ehf = np.exp(-mu * (dphi_f - dphi_h))
        return Eh, Ef, Ehf

    Ev = decays(nu)
    Eb = decays(kappa)

    def mix(u, fac, incr=None, h=0.0):
        # fac index: 0 half, 1 full, 2 half->full
        out = []
        for i, arr in enumerate(u):
            E = Ev[fac] if i < 2 else Eb[fac]
            out.append(E * (arr + h * incr[i]) if incr is not None else E * arr)
        return out

    u0 = list(state.fields())

    def N(u, t):
        s = State(grid, state.params, t, *u)
        return rhs_nonstiff(s, t, linear_only=linear_only)

    k1 = N(u0, t0)
    u_mid1 = mix(u0, 0, k1, 0.5 * dt)
    k2 = N(u_mid1, t0 + 0.5 * dt)
    u_mid2 = [a + 0.5 * dt * b for a, b in zip(mix(u0, 0), k2)]
    k3 = N(u_mid2, t0 + 0.5 * dt)
    u_end = [a + dt * b for a, b in zip(mix(u0, 1), mix(k3, 2))]
    k4 = N(u_end, t0 + dt)

    new = []
    for i in range(4):
        Efull = Ev[1] if i < 2 else Eb[1]
        Ehalf = Ev[2] if i < 2 else Eb[2]
        new.append(
            Efull * u0[i]
            + dt / 6.0 * (Efull * k1[i] + 2.0 * Ehalf * (k2[i] + k3[i]) + k4[i])
        )
    if not np.all([np.all(np.isfinite(a)) for a in new]):
        raise ResolutionOverflow("non-finite coefficients after step")

    t1 = t0 + dt
    v1, v2 = project_divfree(new[0], new[1], grid, t1)
    b1, b2 = project_divfree(new[2], new[3], grid, t1)
    return State(grid, state.params, t1, v1, v2, b1, b2)


def cfl_dt(state: State, dt_max: float = 0.1) -> float:
    """Advective + coupling step bound (diagonal dissipation is integrated exactly).

    The moving-frame gradient magnitude grows linearly in t, so the advective
    constraint tightens as the run shears out; the alpha-coupling constraint
    resolves the rotation of the highest retained x mode.
    """
    grid = state.grid
    speeds = [np.max(np.abs(_to_phys(grid, c))) for c in state.fields()]
    umax = max(max(speeds), 1e-12)
    k_max = grid.nx / 2
    xi_max = (np.pi / grid.Ly) * grid.ny
    grad_max = k_max * (1.0 + state.t) + xi_max
    return min(
        dt_max,
        0.5 / (umax * grad_max),
        0.5 / (state.params.alpha * k_max),
    )


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def compute_pvars(state: State) -> PVars:
    """p_i = invLam_t curl_t of (v or b) on k != 0; first components on k = 0."""
    grid = state.grid
    K, XIT = _sigma(grid, state.t)
    lam = np.sqrt(K ** 2 + XIT ** 2)
    with np.errstate(divide="ignore"):
        ilam = np.where(lam > 0, 1.0 / np.where(lam > 0, lam, 1.0), 0.0)
    knz = K != 0

    def make(c1, c2):
        curl = -1j * XIT * c1 + 1j * K * c2
        p = np.where(knz, ilam * curl, c1)
        return SpectralField(grid, p)

    return PVars(make(state.v1, state.v2), make(state.b1, state.b2))


def _ip(grid: GridSpec, f: np.ndarray, g: np.ndarray) -> float:
    """Real L2 inner product <f, g> from coefficients."""
    return float(grid.Lx * grid.Ly * np.sum(np.conj(f) * g).real)


def nonlinear_flux(state: State) -> float:
    """<v, b.grad b - v.grad v> + <b, b.grad v - v.grad b>; identically zero."""
    grid = state.grid
    t = state.t
    v1, v2, b1, b2 = state.fields()
    total = 0.0
    total += _ip(grid, v1, advect(grid, t, b1, b2, b1) - advect(grid, t, v1, v2, v1))
    total += _ip(grid, v2, advect(grid, t, b1, b2, b2) - advect(grid, t, v1, v2, v2))
    total += _ip(grid, b1, advect(grid, t, b1, b2, v1) - advect(grid, t, v1, v2, b1))
    total += _ip(grid, b2, advect(grid, t, b1, b2, v2) - advect(grid, t, v1, v2, b2))
    return total


def hn_norms(state: State, N: int):
    """(fluctuation, x-average) H^N norms of the joint (v, b) state."""
    grid = state.grid
    w = sobolev_weight(grid, N)
    knz = grid.kk != 0
    neq = eq = 0.0
    for c in state.fields():
        wc2 = (w * np.abs(c)) ** 2
        neq += float(np.sum(wc2[np.broadcast_to(knz, wc2.shape)]))
        eq += float(np.sum(wc2[np.broadcast_to(~knz, wc2.shape)]))
    scale = grid.Lx * grid.Ly
    return float(np.sqrt(scale * neq)), float(np.sqrt(scale * eq))


def weighted_p_norms(state: State, wp: WeightParams):
    """(||A p1_neq||, ||A p2_neq||) with the full weight A at the current time."""
    grid = state.grid
    pv = compute_pvars(state)
    K = np.broadcast_to(grid.kk, (grid.nx, grid.ny))
    XI = np.broadcast_to(grid.xixi, (grid.nx, grid.ny))
    A = eval_A(state.t, K, XI, wp, homogeneous=True)
    knz = K != 0
    scale = grid.Lx * grid.Ly
    n1 = np.sqrt(scale * np.sum((A[knz] * np.abs(pv.p1.coeffs[knz])) ** 2))
    n2 = np.sqrt(scale * np.sum((A[knz] * np.abs(pv.p2.coeffs[knz])) ** 2))
    return float(n1), float(n2)


def compute_energy(state: State, wp: WeightParams) -> float:
    """Main quadratic energy ||A p_neq||^2 + (2/alpha) <dyt invLap chi A p1, A p2>."""
    grid = state.grid
    pv = compute_pvars(state)
    K = np.broadcast_to(grid.kk, (grid.nx, grid.ny))
    XI = np.broadcast_to(grid.xixi, (grid.nx, grid.ny))
    XIT = XI - K * state.t
    A = eval_A(state.t, K, XI, wp, homogeneous=True)
    knz = K != 0
    mag2 = K ** 2 + XIT ** 2
    chi = np.zeros_like(A)
    chi[knz] = eval_chi(state.t, K[knz], XI[knz], wp.nu)
    with np.errstate(divide="ignore", invalid="ignore"):
        dyt_ilap = np.where(mag2 > 0, -1j * XIT / np.where(mag2 > 0, mag2, 1.0), 0.0)
    Ap1 = np.where(knz, A * pv.p1.coeffs, 0.0)
    Ap2 = np.where(knz, A * pv.p2.coeffs, 0.0)
    scale = grid.Lx * grid.Ly
    norm2 = scale * float(np.sum(np.abs(Ap1) ** 2 + np.abs(Ap2) ** 2))
    cross = scale * float(np.sum(np.conj(Ap2) * (dyt_ilap * chi * Ap1)).real)
    return norm2 + (2.0 / wp.alpha) * cross


def incompressibility_defect(state: State) -> float:
    g, t = state.grid, state.t
    return max(
        divergence_defect(state.v1, state.v2, g, t),
        divergence_defect(state.b1, state.b2, g, t),
    )


# ---------------------------------------------------------------------------
# initial data
# ---------------------------------------------------------------------------

def random_divfree_state(
    grid: GridSpec,
    params: PhysParams,
    eps: float,
    eps_tilde: float,
    N: int,
    kband: int = 2,
    xiband: int = 2,
    rng=None,
) -> State:
    """Band-limited random divergence-free data with prescribed H^N amplitudes.

    The fluctuation part comes from perpendicular-gradient potentials (exactly
    divergence-free at t = 0), scaled to joint H^N norm eps; the x-average part
    is horizontal only, scaled to eps_tilde.
    """
    rng = np.random.default_rng(rng)
    K = grid.kk
    ky_index = np.fft.fftfreq(grid.ny, d=1.0 / grid.ny)[None, :]
    band = (np.abs(K) >= 1) & (np.abs(K) <= kband) & (np.abs(ky_index) <= xiband)

    def rand_hermitian():
        phys = rng.standard_normal((grid.nx, grid.ny))
        return np.fft.fft2(phys) / (grid.nx * grid.ny)

    def potential_field():
        phi = np.where(band, rand_hermitian(), 0.0)
        XI = grid.xixi
        return -1j * XI * phi, 1j * K * phi  # perp gradient at t = 0

    v1, v2 = potential_field()
    b1, b2 = potential_field()
    state = State(grid, params, 0.0, v1, v2, b1, b2)
    hn_neq, _ = hn_norms(state, N)
    fl_scale = eps / hn_neq if hn_neq > 0 else 0.0
    for c in (v1, v2, b1, b2):
        c *= fl_scale

    avg_band = (K == 0) & (np.abs(ky_index) >= 1) & (np.abs(ky_index) <= xiband)
    a1 = np.where(avg_band, rand_hermitian(), 0.0)
    a2 = np.where(avg_band, rand_hermitian(), 0.0)
    avg_state = State(grid, params, 0.0, a1, np.zeros_like(a1), a2, np.zeros_like(a2))
    _, hn_eq = hn_norms(avg_state, N)
    if hn_eq > 0 and eps_tilde > 0:
        av_scale = eps_tilde / hn_eq
        v1 += av_scale * a1
        b1 += av_scale * a2
    return State(grid, params, 0.0, v1, v2, b1, b2)


def single_mode_state(
    grid: GridSpec, params: PhysParams, k: int, xi_index: int, amplitude: float,
    magnetic: bool = False,
) -> State:
    """Divergence-free single-mode data with |p| amplitude `amplitude` at t = 0."""
    phi = np.zeros((grid.nx, grid.ny), dtype=complex)
    iy = xi_index % grid.ny
    phi[k % grid.nx, iy] = 0.5
    phi[(-k) % grid.nx, (-xi_index) % grid.ny] = 0.5
    XI = grid.xixi
    K = grid.kk
    c1 = -1j * XI * phi
    c2 = 1j * K * phi
    lam = np.sqrt(float(k ** 2 + grid.xi[iy] ** 2))
    z = np.zeros_like(c1)
    if magnetic:
        st = State(grid, params, 0.0, z, z.copy(), c1, c2)
    else:
        st = State(grid, params, 0.0, c1, c2, z, z.copy())
    # |p| = Lam * |phi-hat|; normalize the L2 size of p at the excited mode pair
    pv = compute_pvars(st)
    p = pv.p2 if magnetic else pv.p1
    cur = float(np.max(np.abs(p.coeffs)))
    scale = amplitude / cur if cur > 0 else 0.0
    del lam
    for c in st.fields():
        c *= scale
    return st


# ---------------------------------------------------------------------------
# driver
# ---------------------------------------------------------------------------

def simulate(
    state: State,
    t_end: float,
    wp: WeightParams,
    sample_dt: float = 0.5,
    dt_max: float = 0.1,
    linear_only: bool = False,
    overflow_fraction: float = 0.2,
    on_sample: Optional[Callable[[DiagnosticsRecord, State], None]] = None,
) -> list:
    """Advance to t_end, sampling diagnostics roughly every sample_dt.

    Raises ResolutionOverflow when the outermost retained band carries more
    than overflow_fraction of the fluctuation energy (under-resolution guard).
    """
    hn0_neq, hn0_eq = hn_norms(state, wp.N)
    norm0 = float(np.hypot(hn0_neq, hn0_eq))
    records = []
    ed_v = ed_b = 0.0
    prev_t = state.t
    prev_ap = weighted_p_norms(state, wp)
    growth = 1.0

    def sample(st: State):
        nonlocal ed_v, ed_b, prev_t, prev_ap, growth
        ap1, ap2 = weighted_p_norms(st, wp)
        dt_acc = st.t - prev_t
        ed_v += 0.5 * dt_acc * (prev_ap[0] ** 2 + ap1 ** 2)
        ed_b += 0.5 * dt_acc * (prev_ap[1] ** 2 + ap2 ** 2)
        prev_t, prev_ap = st.t, (ap1, ap2)
        hn_neq, hn_eq = hn_norms(st, wp.N)
        growth = max(growth, float(np.hypot(hn_neq, hn_eq)) / max(norm0, 1e-300))
        rec = DiagnosticsRecord(
            t=st.t,
            E_main=compute_energy(st, wp),
            HN_neq=hn_neq,
            HN_eq=hn_eq,
            nonlinear_flux=0.0 if linear_only else nonlinear_flux(st),
            ED_v_cum=ed_v,
            ED_b_cum=ed_b,
            growth_L=growth,
        )
        records.append(rec)
        if on_sample is not None:
            on_sample(rec, st)

    sample(state)
    next_sample = state.t + sample_dt
    while state.t < t_end - 1e-12:
        dt = min(cfl_dt(state, dt_max=dt_max), t_end - state.t)
        state = step(state, dt, linear_only=linear_only)
        if not linear_only:
            _check_band_energy(state, overflow_fraction)
        if state.t >= next_sample - 1e-12 or state.t >= t_end - 1e-12:
            sample(state)
            next_sample += sample_dt
    return records


def _check_band_energy(state: State, overflow_fraction: float):
    grid = state.grid
    K = grid.kk
    ky_index = np.fft.fftfreq(grid.ny, d=1.0 / grid.ny)[None, :]
    outer = grid.dealias_mask & (
        (np.abs(K) > grid.nx / 6) | (np.abs(ky_index) > grid.ny / 6)
    )
    knz = np.broadcast_to(K != 0, (grid.nx, grid.ny))
    outer = np.broadcast_to(outer, (grid.nx, grid.ny))
    tot = out = 0.0
    for c in state.fields():
        a2 = np.abs(c) ** 2
        tot += float(np.sum(a2[knz]))
        out += float(np.sum(a2[outer & knz]))
    if tot > 0 and out / tot > overflow_fraction:
        raise ResolutionOverflow(
            f"outer-band fluctuation energy fraction {out / tot:.3f} exceeds "
            f"{overflow_fraction}"
        )


# ---------------------------------------------------------------------------
# checkpoints: flat binary coefficients + human-readable sidecar
# ---------------------------------------------------------------------------

_MAGIC = b"SHMHD1\x00\x00"


def save_checkpoint(state: State, path: str):
    grid = state.grid
    header = _MAGIC + struct.pack(
        "<iiddddd", grid.nx, grid.ny, grid.Ly, state.t,
        state.params.nu, state.params.kappa, state.params.alpha,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        for c in state.fields():
            fh.write(np.ascontiguousarray(c, dtype=np.complex128).tobytes())
    with open(path + ".meta", "w") as fh:
        for key, val in (
            ("format", "shearmhd-checkpoint-v1"),
            ("nx", grid.nx), ("ny", grid.ny), ("Ly", repr(grid.Ly)),
            ("t", repr(state.t)), ("nu", repr(state.params.nu)),
            ("kappa", repr(state.params.kappa)), ("alpha", repr(state.params.alpha)),
        ):
            fh.write(f"{key} = {val}\n")


def load_checkpoint(path: str) -> State:
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != _MAGIC:
            raise ValueError(f"{path}: not a shearmhd checkpoint")
        nx, ny, Ly, t, nu, kappa, alpha = struct.unpack("<iiddddd", fh.read(48))
        grid = GridSpec(nx=nx, ny=ny, Ly=Ly)
        fields = []
        count = nx * ny
        for _ in range(4):
            buf = fh.read(count * 16)
            fields.append(np.frombuffer(buf, dtype=np.complex128).reshape(nx, ny).copy())
    return State(grid, PhysParams(nu=nu, kappa=kappa, alpha=alpha), t, *fields)
