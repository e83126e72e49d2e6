"""Screened potential in slab geometry, sum rules, and traversing-chain asymptotics.

The wire-wire Coulomb kernel is chain-resummed into an effective potential
that stays bounded at vanishing in-plane wavenumber.  This module discretizes
that integral equation (midpoint cells along the slab normal, the kernel
integrated exactly over each cell, internal degrees of freedom summed over
species and charge number with Monte Carlo path cells), solves it densely,
and builds everything the force assembly needs downstream:

* perfect-screening residuals, with the wavenumber sequence extrapolated
  to zero by iterated Richardson steps;
* the resummed bonds F and F^R;
* the coupled two-slab solve and the factorized large-separation closed form
  of the interplate screened potential;
* the leading interplate correlation (single traversing bond, dressed per
  the excluded-convolution rule);
* the in-plane integrability check of the classical monopole potential.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad

from .errors import (DependencyError, ParameterError, SingularArgumentError,
                     SolverError)
from .loops import Loop, SpeciesParams, ThermoState, point_loop, sample_bridge
from .potentials import vel_fourier

__all__ = [
    "SlabGeometry",
    "SpeciesDensity",
    "DensityProfile",
    "ScreeningField",
    "LoopBasis",
    "build_loop_basis",
    "assemble_kernel_matrix",
    "source_column",
    "solve_screened_potential",
    "classical_slab_solve",
    "coupled_two_slab_solve",
    "step_slab_phi_reference",
    "bulk_phi_analytic",
    "richardson_extrapolate",
    "screening_bracket",
    "check_perfect_screening",
    "bulk_sum_rule_oracle",
    "build_F_bond",
    "build_FR_bond",
    "factorize_phi_ab",
    "geometric_chain_prefactor",
    "UrsellLeading",
    "leading_ursell",
    "disc_integral_of_difference",
    "multipole_integrability_check",
    "export_phi_table_csv",
]


# ----------------------------------------------------------------------------
# geometry, densities, screening field
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class SlabGeometry:
    """Two facing slabs [-a, 0] and [0, b] (the second lives at separation d),
    with midpoint-cell grids along the normal."""

    a: float
    b: float
    d: float
    nx_a: int = 32
    nx_b: int = 32

    def __post_init__(self):
        if min(self.a, self.b, self.d) <= 0.0:
            raise ParameterError("a, b, d must all be positive")
        if self.nx_a < 2 or self.nx_b < 2:
            raise ParameterError("need at least 2 cells per slab")

    @property
    def h_a(self) -> float:
        return self.a / self.nx_a

    @property
    def h_b(self) -> float:
        return self.b / self.nx_b

    def cells_a(self) -> np.ndarray:
        return -self.a + self.h_a * (np.arange(self.nx_a) + 0.5)

    def cells_b(self) -> np.ndarray:
        return self.h_b * (np.arange(self.nx_b) + 0.5)

    def hierarchy_report(self, thermo: ThermoState, mean_mass: float,
                         lambda_screen: float, factor: float = 0.25) -> dict:
        """Ratios of the length hierarchy the asymptotics relies on, with flags."""
        lam_mat = thermo.de_broglie(mean_mass)
        lam_cut = lam_mat / np.sqrt(thermo.beta * mean_mass * thermo.c**2)
        ratios = {
            "cut_over_mat": lam_cut / lam_mat,
            "mat_over_ph": lam_mat / thermo.lambda_ph,
            "ph_over_d": thermo.lambda_ph / self.d,
            "screen_over_a": lambda_screen / self.a,
            "screen_over_b": lambda_screen / self.b,
            "a_over_d": self.a / self.d,
            "b_over_d": self.b / self.d,
        }
        return {"ratios": ratios,
                "satisfied": {k: bool(v < factor) for k, v in ratios.items()}}


@dataclass(frozen=True)
class SpeciesDensity:
    """One (species, charge number) cell of the internal-degree sum, with its
    loop density (loops per volume; each p-loop carries p particles)."""

    species: SpeciesParams
    p: int
    loop_density: float

    def __post_init__(self):
        if self.p < 1:
            raise ParameterError("p must be >= 1")
        if self.loop_density < 0.0:
            raise ParameterError("loop density must be >= 0")


@dataclass(frozen=True)
class DensityProfile:
    """Step density profile: homogeneous loop densities inside each slab.

    charge_density sums e * p * rho over the cells of one slab; kappa2 is the
    classical aggregate 4 pi beta sum e^2 p^2 rho that sets the monopole
    screening length.
    """

    beta: float
    slab_a: tuple
    slab_b: tuple

    def cells(self, slab: str):
        return self.slab_a if slab == "a" else self.slab_b

    def charge_density(self, slab: str) -> float:
        import math
        return math.fsum(c.species.charge * c.p * c.loop_density
                         for c in self.cells(slab))

    def is_neutral(self, slab: str, tol: float = 0.0) -> bool:
        scale = sum(abs(c.species.charge) * c.p * c.loop_density
                    for c in self.cells(slab)) or 1.0
        return abs(self.charge_density(slab)) <= tol * scale

    def kappa2(self, slab: str) -> float:
        return 4.0 * np.pi * self.beta * sum(
            c.species.charge**2 * c.p**2 * c.loop_density for c in self.cells(slab))

    def lambda_screen(self, slab: str = "a") -> float:
        k2 = self.kappa2(slab)
        if k2 == 0.0:
            return np.inf
        return 1.0 / np.sqrt(k2)


@dataclass(frozen=True)
class ScreeningField:
    """Local inverse screening length on the cell grid (constant per slab for
    step profiles).

    This is the monopole-sector aggregate over species and charge numbers;
    the loop-resolved per-cell weights 4 pi beta e^2 rho that enter the dense
    operator live in LoopBasis.matrix_weight.
    """

    x: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        if np.any(self.kappa < 0.0):
            raise ParameterError("kappa must be >= 0")

    @classmethod
    def from_profile(cls, geometry: SlabGeometry, profile: DensityProfile):
        xa, xb = geometry.cells_a(), geometry.cells_b()
        ka = np.full(xa.size, np.sqrt(profile.kappa2("a")))
        kb = np.full(xb.size, np.sqrt(profile.kappa2("b")))
        return cls(x=np.concatenate([xa, xb]), kappa=np.concatenate([ka, kb]))


# ----------------------------------------------------------------------------
# kernel-matrix assembly over a loop basis
# ----------------------------------------------------------------------------

def _exp_cell_integral(u, c, h, k):
    """int over the cell [c-h/2, c+h/2] of e^{-k|u - x'|} dx', elementwise."""
    lo = c - 0.5 * h
    hi = c + 0.5 * h
    inside = (u >= lo) & (u <= hi)
    safe = np.where(inside, u, c)
    inner = (2.0 - np.exp(-k * (safe - lo)) - np.exp(-k * (hi - safe))) / k
    outer = (2.0 * np.sinh(0.5 * k * h) / k) * np.exp(-k * np.abs(u - c))
    return np.where(inside, inner, outer)


@dataclass
class LoopBasis:
    """Discretized phase space for the dense solve: one entry per
    (x-cell, species, charge number, path sample)."""

    loops: list
    x: np.ndarray            # cell centers
    cell: np.ndarray         # cell index (within the concatenated grid)
    h: float                 # cell width
    charge: np.ndarray
    pnum: np.ndarray
    measure: np.ndarray      # rho * h / n_paths  (plain phase-space weight)
    beta: float

    @property
    def size(self) -> int:
        return len(self.loops)

    @property
    def matrix_weight(self) -> np.ndarray:
        """kappa^2(1)/(4 pi) measure without the cell width: beta e^2 rho / n_paths."""
        return self.beta * self.charge**2 * self.measure / self.h

    def excursions(self) -> np.ndarray:
        return np.array([lp.species.lambda_ * np.max(np.abs(lp.path[:, 0]))
                         for lp in self.loops])


def build_loop_basis(geometry, profile: DensityProfile, thermo: ThermoState,
                     slab: str = "a", n_paths: int = 8, n_steps: int = 16,
                     seed: int = 0, point_paths: bool = False) -> LoopBasis:
    """Assemble the basis for one slab.

    point_paths=True collapses every path to the degenerate classical wire
    (the monopole sector); otherwise each (species, p) cell carries n_paths
    pinned bridges drawn from disjoint deterministic substreams.
    """
    cells = geometry.cells_a() if slab == "a" else geometry.cells_b()
    h = geometry.h_a if slab == "a" else geometry.h_b
    loops, xs, cidx, chg, ps, meas = [], [], [], [], [], []
    stream = 0
    for ci, xc in enumerate(cells):
        for entry in profile.cells(slab):
            sp = entry.species
            count = 1 if point_paths else n_paths
            for r in range(count):
                if point_paths:
                    path = np.zeros((entry.p * n_steps + 1, 3))
                else:
                    path = sample_bridge(entry.p, n_steps, [seed, stream])
                stream += 1
                loops.append(Loop(x=float(xc), species=sp, p=entry.p, path=path))
                xs.append(xc)
                cidx.append(ci)
                chg.append(sp.charge)
                ps.append(entry.p)
                meas.append(entry.loop_density * h / count)
    return LoopBasis(loops=loops, x=np.array(xs), cell=np.array(cidx), h=h,
                     charge=np.array(chg), pnum=np.array(ps, dtype=int),
                     measure=np.array(meas), beta=thermo.beta)


def _loop_side_factors(loop: Loop, kvec, k):
    """Per-loop time sums entering the x-separated factorization of the
    transverse-Fourier wire kernel.  Returns (row-, row+, col-, col+)."""
    lam = loop.species.lambda_
    y = loop.y[None, :] + lam * loop.path[:-1, 1:]
    xfluct = lam * loop.path[:-1, 0]
    ds = loop.ds
    row_phase = np.exp(1j * (y @ kvec))
    col_phase = np.conj(row_phase)
    em = np.exp(-k * xfluct)
    ep = np.exp(+k * xfluct)
    return (ds * np.sum(row_phase * em), ds * np.sum(row_phase * ep),
            ds * np.sum(col_phase * em), ds * np.sum(col_phase * ep))


def _pair_matrix(basis: LoopBasis, kvec, cell_integrated: bool) -> np.ndarray:
    """Dense wire-kernel matrix over the basis.

    cell_integrated=True integrates the kernel exactly over the source cell
    (the operator of the screened equation); False evaluates it pointwise
    (source columns for the dressing solve).  x-separated pairs use the exact
    two-factor split of the kernel; pairs whose path excursions may straddle
    the gap fall back to the exact double time sum.
    """
    kvec = np.asarray(kvec, dtype=float)
    k = float(np.hypot(kvec[0], kvec[1]))
    if k <= 0.0:
        raise SingularArgumentError("kernel assembly needs k > 0")
    h = basis.h
    fac = np.array([_loop_side_factors(lp, kvec, k) for lp in basis.loops])
    row_m, row_p, col_m, col_p = fac[:, 0], fac[:, 1], fac[:, 2], fac[:, 3]

    x = basis.x
    dx = x[:, None] - x[None, :]
    radii = basis.excursions()
    margin = 0.5 * h if cell_integrated else 0.0
    near = np.abs(dx) <= (radii[:, None] + radii[None, :] + margin + 1e-12)

    cell_factor = 2.0 * np.sinh(0.5 * k * h) / k if cell_integrated else 1.0
    decay = np.exp(-k * np.abs(dx))
    above = dx > 0
    m = np.where(above, row_m[:, None] * col_p[None, :],
                 row_p[:, None] * col_m[None, :]) * decay * cell_factor

    ii, ll = np.nonzero(near)
    for i, l in zip(ii, ll):
        m[i, l] = _near_pair_entry(basis.loops[i], basis.loops[l],
                                   x[l], h, kvec, k, cell_integrated)
    return (2.0 * np.pi / k) * m


def assemble_kernel_matrix(basis: LoopBasis, kvec) -> np.ndarray:
    """Operator of the discretized screened equation:
    T[i, l] = beta e_l^2 rho_l / n_paths * int_cell dx' V^el(i, (x', chi_l), k)."""
    return _pair_matrix(basis, kvec, cell_integrated=True) * basis.matrix_weight[None, :]


def _near_pair_entry(loop_i: Loop, loop_l: Loop, c_l, h, kvec, k, cell_integrated):
    lam_i = loop_i.species.lambda_
    lam_l = loop_l.species.lambda_
    u = loop_i.x + lam_i * loop_i.path[:-1, 0]
    off = lam_l * loop_l.path[:-1, 0]
    yi = loop_i.y[None, :] + lam_i * loop_i.path[:-1, 1:]
    yl = loop_l.y[None, :] + lam_l * loop_l.path[:-1, 1:]
    ph = np.exp(1j * (yi @ kvec))[:, None] * np.exp(-1j * (yl @ kvec))[None, :]
    if cell_integrated:
        core = _exp_cell_integral(u[:, None] - off[None, :], c_l, h, k)
    else:
        core = np.exp(-k * np.abs(u[:, None] - (c_l + off)[None, :]))
    return loop_i.ds * loop_l.ds * np.sum(ph * core)


def source_column(basis: LoopBasis, src: Loop, kvec) -> np.ndarray:
    """Right-hand-side column V^el(i, src, k) for an external source loop
    (not part of the integration measure, e.g. the border charge)."""
    return np.array([vel_fourier(lp, src, kvec) for lp in basis.loops])


def solve_screened_potential(basis: LoopBasis, kvec, rhs: np.ndarray,
                             kappa_zero: bool = False) -> np.ndarray:
    """Solve (I + T) Phi = V for the given right-hand-side columns.

    kappa_zero switches the medium off, returning the bare columns (the
    no-screening limit Phi = V^el holds exactly).
    """
    rhs = np.asarray(rhs)
    if kappa_zero or not np.any(basis.measure > 0.0):
        return rhs.copy()
    t = assemble_kernel_matrix(basis, kvec)
    a = np.eye(basis.size, dtype=complex) + t
    try:
        return np.linalg.solve(a, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"dense screened-potential solve failed: {exc}",
                          condition_number=float(np.linalg.cond(a))) from exc


# ----------------------------------------------------------------------------
# classical (monopole-sector) solver and references
# ----------------------------------------------------------------------------

def classical_slab_solve(x_cells, h, kappa2_cells, k, x_sources):
    """Monopole-sector dense solve on one or more slabs.

    Returns Phi[node, source] for unit point charges at x_sources; the kernel
    is integrated exactly over each source cell.
    """
    x_cells = np.asarray(x_cells, dtype=float)
    kappa2_cells = np.asarray(kappa2_cells, dtype=float)
    if k <= 0.0:
        raise SingularArgumentError("classical solve needs k > 0")
    n = x_cells.size
    cellint = _exp_cell_integral(x_cells[:, None], x_cells[None, :], h, k)
    t = (kappa2_cells[None, :] / (4.0 * np.pi)) * (2.0 * np.pi / k) * cellint
    rhs = (2.0 * np.pi / k) * np.exp(-k * np.abs(
        x_cells[:, None] - np.atleast_1d(np.asarray(x_sources, dtype=float))[None, :]))
    try:
        return np.linalg.solve(np.eye(n) + t, rhs)
    except np.linalg.LinAlgError as exc:
        raise SolverError(f"classical slab solve failed: {exc}",
                          condition_number=float(np.linalg.cond(np.eye(n) + t))) from exc


def coupled_two_slab_solve(geometry: SlabGeometry, kappa2_a, kappa2_b, k):
    """Classical solve of the full two-slab system at in-plane wavenumber k.

    Returns (x_a_cells, x_b_cells, Phi_AB) where Phi_AB[i, j] couples a cell
    of the near slab to a cell of the far slab (positions x_j + d).
    """
    xa = geometry.cells_a()
    xb = geometry.cells_b() + geometry.d
    if abs(geometry.h_a - geometry.h_b) > 1e-12 * geometry.h_a:
        raise ParameterError("coupled solve expects equal cell widths")
    pos = np.concatenate([xa, xb])
    kap = np.concatenate([np.full(xa.size, kappa2_a), np.full(xb.size, kappa2_b)])
    phi = classical_slab_solve(pos, geometry.h_a, kap, k, pos[xa.size:])
    return geometry.cells_a(), geometry.cells_b(), phi[: xa.size, :]


def step_slab_phi_reference(x1, x2, k, a, kappa):
    """Piecewise-exponential reference solution of the screened equation for a
    single homogeneous slab [-a, 0] (vacuum outside), unit source at x2.

    Matching value and slope at both faces of  -Phi'' + (k^2 + kappa^2) Phi =
    4 pi delta(x - x2)  inside and  -Phi'' + k^2 Phi = 0  outside.
    """
    b = np.hypot(k, kappa)
    if not (-a < x2 < 0.0):
        raise ParameterError("source must lie strictly inside the slab")
    # unknowns: C1, C2 (homogeneous inside), D (x > 0), E (x < -a)
    mat = np.array([
        [1.0, 1.0, -1.0, 0.0],
        [b, -b, k, 0.0],
        [np.exp(-b * a), np.exp(b * a), 0.0, -1.0],
        [b * np.exp(-b * a), -b * np.exp(b * a), 0.0, -k],
    ])
    part = 2.0 * np.pi / b
    rhs = np.array([
        -part * np.exp(-b * abs(0.0 - x2)),
        part * b * np.exp(-b * abs(0.0 - x2)),
        -part * np.exp(-b * abs(-a - x2)),
        -part * b * np.exp(-b * abs(-a - x2)),
    ])
    c1, c2, dcoef, ecoef = np.linalg.solve(mat, rhs)
    x1 = np.asarray(x1, dtype=float)
    inside = part * np.exp(-b * np.abs(x1 - x2)) + c1 * np.exp(b * x1) + c2 * np.exp(-b * x1)
    right = dcoef * np.exp(-k * x1)
    left = ecoef * np.exp(k * (x1 + a))
    return np.where(x1 > 0.0, right, np.where(x1 < -a, left, inside))


def bulk_phi_analytic(x1, x2, k, kappa):
    """Homogeneous-medium screened kernel: (2 pi / b) e^{-b |x1 - x2|},
    b = sqrt(k^2 + kappa^2)."""
    b = np.hypot(k, kappa)
    return (2.0 * np.pi / b) * np.exp(-b * np.abs(np.asarray(x1) - x2))


# ----------------------------------------------------------------------------
# sum rules
# ----------------------------------------------------------------------------

def richardson_extrapolate(values, ratio: float = 2.0):
    """Iterated Richardson (Neville) limit of a sequence sampled at
    k_n = k_0 / ratio^n, assuming a power-series error in k.

    Returns (limit, correction) where correction is the size of the final
    Neville step, a practical error estimate."""
    v = [np.asarray(x, dtype=complex) for x in values]
    if len(v) < 2:
        raise ParameterError("need at least two values to extrapolate")
    diags = [v[-1]]
    for j in range(1, len(v)):
        fac = ratio**j
        v = [(fac * v[i + 1] - v[i]) / (fac - 1.0) for i in range(len(v) - 1)]
        diags.append(v[-1])
    return v[0], float(np.max(np.abs(diags[-1] - diags[-2])))


def screening_bracket(basis: LoopBasis, phi_column: np.ndarray) -> complex:
    """Charge-weighted phase-space integral of the F bond against a fixed
    source, normalized by the source charge: tends to -1 by perfect screening."""
    w = basis.pnum * basis.charge**2 * basis.measure
    return complex(-basis.beta * np.sum(w * phi_column))


def check_perfect_screening(basis: LoopBasis, src: Loop, k_sequence,
                            solver=solve_screened_potential):
    """Residual of the perfect-screening rule for the F bond.

    Solves at the descending wavenumber sequence, extrapolates the bracket to
    k = 0, and reports |bracket + 1| (relative to the unit source value).
    """
    vals = []
    for k in k_sequence:
        kvec = np.array([float(k), 0.0])
        rhs = source_column(basis, src, kvec)
        phi = solver(basis, kvec, rhs)
        vals.append(screening_bracket(basis, phi))
    bracket, correction = richardson_extrapolate(vals)
    bracket = complex(bracket)
    return {
        "bracket": bracket,
        "residual_rel": abs(bracket + 1.0),
        "per_k": [complex(v) for v in vals],
        "extrapolation_correction": float(correction),
        "converged": bool(correction < 0.1),
    }


def bulk_sum_rule_oracle(kappa, k_sequence, half_width=40.0):
    """Quadrature of the analytic homogeneous screened kernel against the
    screening weight, extrapolated to k = 0; the exact limit is 1."""
    vals = []
    for k in k_sequence:
        b = np.hypot(k, kappa)
        val, _ = quad(lambda x: (kappa**2 / (4.0 * np.pi)) * bulk_phi_analytic(x, 0.0, k, kappa),
                      -half_width / kappa, half_width / kappa, limit=200)
        vals.append(val)
    limit, corr = richardson_extrapolate(vals)
    limit = float(np.real(limit))
    return {"limit": limit, "residual_rel": abs(limit - 1.0),
            "per_k": vals, "extrapolation_correction": float(corr)}


# ----------------------------------------------------------------------------
# resummed bonds
# ----------------------------------------------------------------------------

_EXP_CLAMP = 700.0


def build_F_bond(phi, e_i, e_j, beta):
    """Linear resummed bond: -beta e_i e_j Phi."""
    return -beta * e_i * e_j * np.asarray(phi)


def build_FR_bond(phi, w, e_i, e_j, beta):
    """Nonlinear remainder bond: e^{-beta e_i e_j (Phi + W)} - 1 + beta e_i e_j Phi.

    Returns (values, strong_coupling_flag); the exponent is clamped to avoid
    overflow and the flag marks any clamped entry.
    """
    expo = -beta * e_i * e_j * (np.asarray(phi) + np.asarray(w))
    flagged = bool(np.any(np.abs(expo) > _EXP_CLAMP))
    expo = np.clip(expo, -_EXP_CLAMP, _EXP_CLAMP)
    return np.exp(expo) - 1.0 + beta * e_i * e_j * np.asarray(phi), flagged


# ----------------------------------------------------------------------------
# traversing-chain factorization
# ----------------------------------------------------------------------------

def geometric_chain_prefactor(q: float, d: float) -> float:
    """Resummed weight of chains with 2n+1 traversing links:
    sum_n e^{-2nq} (q e^{-q} / 2 pi d) = q / (4 pi d sinh q)."""
    if q <= 0.0 or d <= 0.0:
        raise ParameterError("q and d must be positive")
    return q / (4.0 * np.pi * d * np.sinh(q))


def factorize_phi_ab(phi_a0, phi_b0, q: float, d: float) -> np.ndarray:
    """Leading interplate screened potential: the geometric chain prefactor
    times the outer product of single-plate border columns at zero wavenumber."""
    pref = geometric_chain_prefactor(q, d)
    return pref * np.outer(np.asarray(phi_a0), np.asarray(phi_b0))


# ----------------------------------------------------------------------------
# leading interplate correlation
# ----------------------------------------------------------------------------

@dataclass
class UrsellLeading:
    """Single-traversing-bond pieces of the interplate correlation, dressed
    border correlations, and their charge-weighted brackets."""

    basis_a: LoopBasis
    basis_b: LoopBasis
    g_over_e0_a: np.ndarray
    g_over_e0_b: np.ndarray
    bracket_a: float
    bracket_b: float
    dressing_columns_a: dict = field(default_factory=dict)
    dressing_columns_b: dict = field(default_factory=dict)
    sum_rule_residuals: dict = field(default_factory=dict)

    def h_single_f(self, i: int, j: int, q: float, d: float, beta: float) -> float:
        """Factorized single-F-link piece at scaled wavenumber q."""
        return (-(1.0 / (beta * d)) * q / (4.0 * np.pi * np.sinh(q))
                * self.g_over_e0_a[i] * self.g_over_e0_b[j])

    def dressed_weights(self, root: int, side: str) -> np.ndarray:
        """Phase-space weights of [h0(root, i) + delta(root, i)/rho(i)] rho(i):
        the dressing of the nonlinear traversing bond (closure: h0 = F0)."""
        basis = self.basis_a if side == "a" else self.basis_b
        cols = self.dressing_columns_a if side == "a" else self.dressing_columns_b
        if root not in cols:
            raise DependencyError(f"no dressing column solved for root {root}")
        h_row = -basis.beta * basis.charge[root] * basis.charge * np.real(cols[root])
        w = basis.measure * h_row
        w[root] += 1.0
        return w

    def h_single_fr(self, root_a: int, root_b: int, qvec, d: float,
                    thermo: ThermoState) -> float:
        """Single nonlinear-traversing-bond piece: dressed contraction of the
        dipolar interplate potential (linearized bond, leading order)."""
        from .potentials import _vtilde_derivs
        qvec = np.asarray(qvec, dtype=float)
        wa = self.dressed_weights(root_a, "a")
        wb = self.dressed_weights(root_b, "b")
        ea = self.basis_a.charge
        eb = self.basis_b.charge
        feats_a = self._wab_features(self.basis_a, qvec, thermo)
        feats_b = self._wab_features(self.basis_b, qvec, thermo)
        va = (wa * ea)[:, None] * feats_a
        vb = (wb * eb)[:, None] * feats_b
        core = _vtilde_derivs(1.0, qvec, order_max=2)
        g = np.zeros((6, 6), dtype=complex)
        g[0:3, 0:3] = -core[2]
        g[0:3, 3:6] = 1j * core[1]
        g[3:6, 0:3] = 1j * core[1]
        g[3:6, 3:6] = core[0]
        total = np.sum(va, axis=0) @ g @ np.sum(vb, axis=0)
        return float(np.real(-thermo.beta * total / d))

    @staticmethod
    def _wab_features(basis: LoopBasis, qvec, thermo: ThermoState) -> np.ndarray:
        from .potentials import loop_current_moments
        feats = np.zeros((basis.size, 6))
        for idx, lp in enumerate(basis.loops):
            a, b = loop_current_moments(lp, qvec)
            scale = lp.species.lambda_ / np.sqrt(
                thermo.beta * lp.species.mass) / thermo.c
            feats[idx, 0:3] = scale * a
            feats[idx, 3:6] = scale * b
        return feats


def leading_ursell(basis_a: LoopBasis, basis_b: LoopBasis, border_species,
                   k_sequence, dressing_roots=()) -> UrsellLeading:
    """Solve both single-plate systems along the wavenumber sequence and build
    the leading interplate correlation pieces.

    The border charge of each slab sits at its inner face; the dressed border
    correlation reduces, under the chain closure, to the F bond against that
    charge, extrapolated to zero wavenumber.  dressing_roots selects basis
    indices for which internal columns are also solved (they anchor the
    nonlinear-bond piece).
    """
    roots = list(dressing_roots)
    out = {}
    for tag, basis in (("a", basis_a), ("b", basis_b)):
        src = point_loop(0.0, border_species, n_steps=basis.loops[0].n_steps)
        cols, root_cols, brackets = [], [], []
        for k in k_sequence:
            kvec = np.array([float(k), 0.0])
            t = assemble_kernel_matrix(basis, kvec)
            a = np.eye(basis.size, dtype=complex) + t
            rhs = [source_column(basis, src, kvec)]
            if roots:
                pair = _pair_matrix(basis, kvec, cell_integrated=False)
                rhs.extend(pair[:, r] for r in roots)
            sol = np.linalg.solve(a, np.column_stack(rhs))
            cols.append(sol[:, 0])
            root_cols.append(sol[:, 1:])
            brackets.append(screening_bracket(basis, sol[:, 0]))
        phi0, _ = richardson_extrapolate(cols)
        bracket0, corr = richardson_extrapolate(brackets)
        dress = {}
        if roots:
            mat0, _ = richardson_extrapolate(root_cols)
            dress = {r: mat0[:, idx] for idx, r in enumerate(roots)}
        out[tag] = (np.real(phi0), float(np.real(bracket0)), dress,
                    abs(complex(bracket0) + 1.0), float(corr))
    g_a = -basis_a.beta * basis_a.charge * out["a"][0]
    g_b = -basis_b.beta * basis_b.charge * out["b"][0]
    return UrsellLeading(
        basis_a=basis_a, basis_b=basis_b,
        g_over_e0_a=g_a, g_over_e0_b=g_b,
        bracket_a=out["a"][1], bracket_b=out["b"][1],
        dressing_columns_a=out["a"][2], dressing_columns_b=out["b"][2],
        sum_rule_residuals={
            "a": out["a"][3], "b": out["b"][3],
            "extrapolation_a": out["a"][4], "extrapolation_b": out["b"][4],
        },
    )


# ----------------------------------------------------------------------------
# in-plane integrability of the classical monopole potential
# ----------------------------------------------------------------------------

def disc_integral_of_difference(k_grid, phi_base, phi_shift, dy_shift, radius,
                                n_quad=32768):
    """int over the disc |y| <= R of [Phi_shift(|y + dy|) - Phi_base(|y|)] d2y.

    Exact in-plane Parseval form: R int_0^inf dk J1(k R) [J0(k dy) Phi_shift(k)
    - Phi_base(k)], evaluated by dense Simpson quadrature on monotone
    interpolants of the tabulated transforms, plus the analytic small-k head.
    The full-plane limit is the zero-wavenumber transform difference, so the
    truncated integrals form a Cauchy sequence exactly when that limit exists.
    """
    from scipy.interpolate import PchipInterpolator
    from scipy.special import j0 as bessel_j0, j1 as bessel_j1
    k_grid = np.asarray(k_grid, dtype=float)
    base = PchipInterpolator(k_grid, np.asarray(phi_base))
    shift = PchipInterpolator(k_grid, np.asarray(phi_shift))
    kq = np.linspace(k_grid[0], k_grid[-1], n_quad + 1)
    f = bessel_j0(kq * dy_shift) * shift(kq) - base(kq)
    integrand = radius * bessel_j1(kq * radius) * f
    from scipy.integrate import simpson
    val = simpson(integrand, x=kq)
    # analytic head on [0, k_min]: J1(kR) ~ kR/2 and f ~ f(k_min)
    head = 0.25 * radius**2 * k_grid[0] ** 2 * f[0]
    return float(val + head)


def multipole_integrability_check(phi_k_eval, kappa, x1, x2, dx_shift, dy_shift,
                                  r_checks=(30.0, 45.0, 60.0), k_max=40.0,
                                  n_k=160, k_min_factor=1e-4, tol=1e-3):
    """Cauchy-convergence report for the in-plane integral of a displaced-wire
    bond built on the classical monopole potential.

    phi_k_eval(x1, x2, k) must return the transverse transform of the solved
    classical potential.  The difference Phi(x1, x2 + dx + lam X) - Phi(x1, x2)
    is integrated over growing discs; boundedness of the zero-wavenumber
    transform shows up as a Cauchy sequence in the disc radius.
    """
    lam_s = 1.0 / kappa
    k_grid = np.unique(np.concatenate([
        np.geomspace(k_min_factor / lam_s, 0.5 / lam_s, n_k // 2),
        np.linspace(0.5 / lam_s, k_max / lam_s, n_k // 2),
    ]))
    phi_base = np.array([phi_k_eval(x1, x2, k) for k in k_grid])
    phi_shift = np.array([phi_k_eval(x1, x2 + dx_shift, k) for k in k_grid])
    r_values = np.asarray(r_checks, dtype=float) * lam_s
    ivals = np.array([
        disc_integral_of_difference(k_grid, phi_base, phi_shift, dy_shift, r)
        for r in r_values])
    scale = max(abs(ivals[-1]), 1e-30)
    deltas = np.abs(np.diff(ivals)) / scale
    return {
        "radii": r_values.tolist(),
        "integrals": ivals.tolist(),
        "full_plane_limit": float(phi_shift[0] - phi_base[0]),
        "cauchy_deltas": deltas.tolist(),
        "passed": bool(np.all(deltas < tol)),
        "tolerance": tol,
    }


def export_phi_table_csv(path, basis_i: LoopBasis, basis_j_labels, phi, k):
    """CSV dump of a solved table keyed by (x_i, species_i, p_i, x_j, species_j,
    p_j, k)."""
    import csv
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_i", "species_i", "p_i", "x_j", "species_j", "p_j", "k",
                    "re_phi", "im_phi"])
        for i, lp in enumerate(basis_i.loops):
            for j, (xj, spj, pj) in enumerate(basis_j_labels):
                val = phi[i, j]
                w.writerow([lp.x, lp.species.name, lp.p, xj, spj, pj, k,
                            np.real(val), np.imag(val)])
