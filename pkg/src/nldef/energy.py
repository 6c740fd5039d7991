"""Double-integral engine for the nonlocal symmetric difference-quotient energy.

For a field u, domain box U, exponent p and mollifier rho_eps this computes

    F(u, U) = ∫_U ∫ |<u(y) - u(x), y - x>|^p / |y - x|^{2p} rho_eps(y - x) dy dx

with y restricted to U, by a midpoint rule over outer cells and, per outer
node, an inner quadrature in h = y - x coordinates: Gauss nodes in radius on
the mollifier's support bands crossed with a sphere rule in direction, so the
singular |h| factors cancel analytically and only the angular variation is
resolved. Inner nodes leaving U are rejected (zero mask).

Determinism: outer cells are split into fixed-size contiguous tiles, each
tile's per-cell masses are computed with elementwise kernels in a fixed node
order, and the final reduction is one pairwise tree over the full cell array.
The tiling does not depend on the worker count, so results are bitwise
reproducible across 1, 2 or 8 workers.

The residual variant subtracts the first-order term <Eu(x) h, h>/|h|^2 before
taking absolute values; its small-eps limit isolates the singular part of the
symmetric-gradient measure.
"""

from __future__ import annotations

import atexit
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError, DimensionError, DomainError, ModelError, ParameterError
from .fields import DomainBox, FieldSpec, PlanarJumpField, SampledField, ground_truth
from .mollifiers import SURFACE_AREA, MollifierSpec
from .symnorm import make_sphere_rule

__all__ = [
    "EnergyRequest",
    "EnergyResult",
    "energy",
    "local_density",
    "residual_energy",
    "upper_bound_rhs",
    "pairwise_total",
]

_TILE_NODE_BUDGET = 1 << 20  # outer-cells x inner-nodes per tile


def pairwise_total(values) -> float:
    """Sum with a fixed pairwise tree; depends only on the element order."""
    buf = np.array(values, dtype=np.float64).ravel()
    n = buf.size
    while n > 1:
        half = n // 2
        buf[:half] = buf[:half] + buf[half : 2 * half]
        if n & 1:
            buf[half] = buf[2 * half]
            n = half + 1
        else:
            n = half
    return float(buf[0]) if n else 0.0


@dataclass(frozen=True, eq=False)
class EnergyRequest:
    field: FieldSpec
    domain: DomainBox
    p: float
    mollifier: MollifierSpec
    outer_grid: int
    inner_mode: str = "radial_spherical"
    inner_level: int = 16
    trunc_tol: float = 1e-10
    workers: int | None = None

    def __post_init__(self):
        if not (isinstance(self.p, (int, float)) and self.p >= 1):
            raise ParameterError(f"p must be >= 1, got {self.p}")
        if self.outer_grid < 2:
            raise ParameterError(f"outer grid needs N >= 2, got {self.outer_grid}")
        if not 0 < self.trunc_tol <= 1e-2:
            raise ParameterError(
                f"truncation tol must lie in (0, 1e-2], got {self.trunc_tol}"
            )
        if self.inner_mode not in ("radial_spherical", "tensor"):
            raise ParameterError(f"unknown inner mode {self.inner_mode!r}")
        if self.inner_level < 1:
            raise ParameterError("inner level must be >= 1")
        if not (self.field.dim == self.domain.dim == self.mollifier.dim):
            raise DimensionError("field, domain and mollifier dimensions must agree")
        object.__setattr__(self, "p", float(self.p))


@dataclass(frozen=True, eq=False)
class EnergyResult:
    value: float
    truncation_radius: float
    samples_outer: int
    samples_inner: int
    elapsed: float
    est_quadrature_error: float


def _resolve_workers(explicit: int | None) -> int:
    if explicit is not None:
        if explicit < 1:
            raise ParameterError("workers must be >= 1")
        return explicit
    env = os.environ.get("NLD_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise ConfigError(f"NLD_THREADS={env!r} is not an integer") from None
        if n < 1:
            raise ConfigError(f"NLD_THREADS={env!r} must be >= 1")
        return n
    return os.cpu_count() or 1


_POOLS: dict[int, ProcessPoolExecutor] = {}


def _shutdown_pools():
    for ex in _POOLS.values():
        ex.shutdown(wait=False, cancel_futures=True)
    _POOLS.clear()


atexit.register(_shutdown_pools)


def _get_pool(workers: int) -> ProcessPoolExecutor:
    ex = _POOLS.get(workers)
    if ex is None:
        ex = ProcessPoolExecutor(max_workers=workers)
        _POOLS[workers] = ex
    return ex


# ---------------------------------------------------------------------------
# quadrature assembly


def _radial_spherical_nodes(mollifier: MollifierSpec, level: int, trunc_tol: float):
    """Inner nodes H (K, d), weights W (K,), inverse square radii (K,)."""
    dim = mollifier.dim
    sphere = make_sphere_rule(dim, level)
    n_rad = max(2, level // 4)
    z, gw = np.polynomial.legendre.leggauss(n_rad)
    radii = []
    rweights = []
    for a, b in mollifier.radial_bands(trunc_tol):
        r = 0.5 * (b - a) * z + 0.5 * (a + b)
        w = 0.5 * (b - a) * gw
        radii.append(r)
        rweights.append(
            SURFACE_AREA[dim] * w * r ** (dim - 1) * mollifier.radial_profile(r)
        )
    r_all = np.concatenate(radii)
    wr_all = np.concatenate(rweights)
    h = (r_all[:, None, None] * sphere.nodes[None, :, :]).reshape(-1, dim)
    w = (wr_all[:, None] * sphere.weights[None, :]).reshape(-1)
    inv_r2 = np.repeat(1.0 / (r_all * r_all), len(sphere))
    return h, w, inv_r2


def _tensor_nodes(mollifier: MollifierSpec, level: int, trunc_tol: float):
    """Gauss grid on the truncation cube [-R, R]^d weighted by rho_eps."""
    dim = mollifier.dim
    radius = mollifier.support_radius(trunc_tol)
    n = level + (level & 1)  # even count keeps h = 0 off the grid
    z, gw = np.polynomial.legendre.leggauss(n)
    x1 = radius * z
    w1 = radius * gw
    grids = np.meshgrid(*([x1] * dim), indexing="ij")
    h = np.stack([g.ravel() for g in grids], axis=1)
    w = w1
    for _ in range(dim - 1):
        w = np.multiply.outer(w, w1)
    w = w.ravel() * mollifier.eval(h)
    keep = w > 0.0
    h = h[keep]
    w = w[keep]
    inv_r2 = 1.0 / (h * h).sum(axis=1)
    return h, w, inv_r2


def _inner_nodes(req: EnergyRequest, level: int):
    if req.inner_mode == "tensor":
        return _tensor_nodes(req.mollifier, level, req.trunc_tol)
    return _radial_spherical_nodes(req.mollifier, level, req.trunc_tol)


def _midpoints(box: DomainBox, n: int):
    axes = [
        box.lo[i] + (box.hi[i] - box.lo[i]) * (np.arange(n) + 0.5) / n
        for i in range(box.dim)
    ]
    grids = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    return pts, box.volume() / n**box.dim


# ---------------------------------------------------------------------------
# tile kernel


def _abs_pow(q: np.ndarray, p: float) -> np.ndarray:
    if p == 1.0:
        return np.abs(q)
    if p == 2.0:
        return q * q
    return np.abs(q) ** p


def _tile_masses(field, domain, x_tile, h, w, inv_r2, p, residual, cellvol):
    """Per-cell masses (densities times cell volume) for one outer tile."""
    x = x_tile[:, None, :]
    hh = h[None, :, :]
    inside = domain.contains(x + hh)
    q = np.asarray(field.delta_dot_h(x, hh)) * inv_r2
    if residual:
        e = field.sym_gradient(x_tile)  # (t, d, d)
        d = h.shape[1]
        for i in range(d):
            for j in range(d):
                q = q - e[:, i, j, None] * (h[:, i] * h[:, j] * inv_r2)[None, :]
    contrib = _abs_pow(q, p) * w
    return np.where(inside, contrib, 0.0).sum(axis=1) * cellvol


def _run_span(args):
    field, domain, x_span, h, w, inv_r2, p, residual, cellvol, start = args
    return start, _tile_masses(field, domain, x_span, h, w, inv_r2, p, residual, cellvol)


def _all_masses(req: EnergyRequest, level: int, workers: int, residual: bool):
    """Masses mu^p(x_i) * cellvol for every outer cell, in fixed cell order."""
    h, w, inv_r2 = _inner_nodes(req, level)
    pts, cellvol = _midpoints(req.domain, req.outer_grid)
    n_outer = pts.shape[0]
    k_inner = h.shape[0]
    tile = max(1, _TILE_NODE_BUDGET // max(1, k_inner))
    spans = [(s, min(s + tile, n_outer)) for s in range(0, n_outer, tile)]
    masses = np.empty(n_outer)
    if workers <= 1 or len(spans) == 1:
        for s, e in spans:
            masses[s:e] = _tile_masses(
                req.field, req.domain, pts[s:e], h, w, inv_r2, req.p, residual, cellvol
            )
        return masses, pts, cellvol, k_inner
    tasks = [
        (req.field, req.domain, pts[s:e], h, w, inv_r2, req.p, residual, cellvol, s)
        for s, e in spans
    ]
    pool = _get_pool(workers)
    for start, part in pool.map(_run_span, tasks):
        masses[start : start + part.shape[0]] = part
    return masses, pts, cellvol, k_inner


def _check_residual_ok(req: EnergyRequest):
    if req.p != 1.0:
        raise ParameterError("residual energy is defined for p = 1 only")
    if isinstance(req.field, SampledField):
        raise ModelError("residual energy needs a closed-form gradient")


def _evaluate(req: EnergyRequest, residual: bool) -> EnergyResult:
    t0 = time.perf_counter()
    workers = _resolve_workers(req.workers)
    radius = req.mollifier.support_radius(req.trunc_tol)
    if req.domain.is_empty:
        return EnergyResult(0.0, radius, 0, 0, time.perf_counter() - t0, 0.0)
    coarse_masses, _, _, _ = _all_masses(req, req.inner_level, workers, residual)
    fine_masses, _, _, k_fine = _all_masses(req, 2 * req.inner_level, workers, residual)
    coarse = pairwise_total(coarse_masses)
    fine = pairwise_total(fine_masses)
    return EnergyResult(
        value=fine,
        truncation_radius=radius,
        samples_outer=fine_masses.shape[0],
        samples_inner=k_fine,
        elapsed=time.perf_counter() - t0,
        est_quadrature_error=abs(fine - coarse),
    )


def energy(req: EnergyRequest) -> EnergyResult:
    """F(u, U) by midpoint-outer, refined-inner quadrature.

    value comes from the finer inner level (2 x inner_level);
    est_quadrature_error is the gap to the coarser level.
    """
    return _evaluate(req, residual=False)


def residual_energy(req: EnergyRequest) -> EnergyResult:
    """Same engine with the first-order term subtracted (p = 1 only)."""
    _check_residual_ok(req)
    return _evaluate(req, residual=True)


def local_density(req: EnergyRequest, x) -> float:
    """mu(x): the inner integral alone at one point, p-th root applied."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (req.domain.dim,):
        raise DimensionError(f"point shape {x.shape} does not match the domain")
    if not bool(req.domain.contains(x)):
        raise DomainError("point lies outside the domain")
    h, w, inv_r2 = _inner_nodes(req, 2 * req.inner_level)
    mass = _tile_masses(
        req.field, req.domain, x[None, :], h, w, inv_r2, req.p, False, 1.0
    )[0]
    return float(mass ** (1.0 / req.p))


def density_masses(req: EnergyRequest, residual: bool = False):
    """(midpoints, masses, est_quadrature_error): the measure the energy sums.

    Shares the energy pipeline so pairwise_total(masses) equals
    energy(req).value bit for bit.
    """
    if residual:
        _check_residual_ok(req)
    workers = _resolve_workers(req.workers)
    if req.domain.is_empty:
        d = req.domain.dim
        return np.zeros((0, d)), np.zeros(0), 0.0
    coarse_masses, _, _, _ = _all_masses(req, req.inner_level, workers, residual)
    fine_masses, pts, _, _ = _all_masses(req, 2 * req.inner_level, workers, residual)
    est = abs(pairwise_total(fine_masses) - pairwise_total(coarse_masses))
    return pts, fine_masses, est


def upper_bound_rhs(
    field: FieldSpec, box: DomainBox, radius: float, p: float, mollifier: MollifierSpec
) -> float:
    """[Eu]_p(U_R)^p + (2/R^p) ||u||_p(U)^p tail_mass(R), the a-priori bound.

    Valid for fields with an integrable symmetric gradient; jump fields are
    rejected. Both integrals use adaptive tensor Gauss quadrature.
    """
    if isinstance(field, PlanarJumpField):
        raise ModelError("the upper bound needs a gradient field without jumps")
    if isinstance(field, SampledField):
        raise ModelError("the upper bound needs a closed-form field")
    if not radius > 0:
        raise ParameterError("R must be positive")
    if p < 1:
        raise ParameterError(f"p must be >= 1, got {p}")
    rule = make_sphere_rule(field.dim, 64)
    grad_term = ground_truth(field, box.dilate(radius), p, rule).total
    tail = mollifier.tail_mass(radius)
    if tail == 0.0:
        return grad_term
    from .fields import _adaptive_box_integral  # local import, private helper

    def norm_p(pts):
        u = field.eval(pts)
        return ((u * u).sum(axis=-1)) ** (0.5 * p)

    u_term = _adaptive_box_integral(norm_p, box)
    return grad_term + (2.0 / radius**p) * u_term * tail


def with_workers(req: EnergyRequest, workers: int | None) -> EnergyRequest:
    return replace(req, workers=workers)
