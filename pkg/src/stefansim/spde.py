"""Explicit finite-difference integrator for the coupled reflected system.

In the frame attached to the boundary the two profiles solve

    dv1/dt = Lap v1 - c * d/dx(cap(v1)) + f1(x, v1) + sigma1(x, v1) * xi1 + eta1
    dv2/dt = Lap v2 + c * d/dx(cap(v2)) + f2(x, v2) + sigma2(x, v2) * xi2 + eta2

with c = h(cap(v1), cap(v2)) the boundary speed, cap the truncation
(v ^ M on the compact domain, the weighted cap on the half-line), and
eta the reflection keeping both profiles nonnegative.  One step is:
explicit Euler increment (upwind advection selected by the sign of c),
projection onto the nonnegative cone, Dirichlet re-zeroing, then the
boundary update p' = h and p <- p + dt p'.  Blow-up is bookkept by
flagging the state once the pair norm reaches M_max; no infinities are
ever stored.
"""
from __future__ import annotations

import csv
import dataclasses
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._fd import laplacian, upwind_gradient
from .boundary import BoundaryFunctional, F_Mr, advance_p, eval_h
from .errors import (AlreadyBlownUp, CflViolation, ConfigError,
                     DimensionMismatch, GridMismatch)
from .grids import COMPACT, GridSpec
from .noise import sample_white_noise


@dataclass
class ModelCoefficients:
    """Drift and volatility of the relative coordinate, plus growth metadata.

    The callables take (x, u) arrays of equal shape and must broadcast.
    r and delta describe the half-line growth/decay envelope of condition
    |sigma(x, u)| <= growth_R * exp(-delta x) * (exp(r x) + |u|); when
    growth_R is set the envelope is spot-checked before half-line runs.
    """

    f1: Callable
    f2: Callable
    sigma1: Callable
    sigma2: Callable
    r: float = 0.0
    delta: float = 0.0
    lipschitz_C: float | None = None
    growth_R: float | None = None

    def validate_growth(self, grid: GridSpec, u_samples=(0.0, 0.5, 2.0, 10.0)) -> float:
        """Max violation of the volatility growth envelope on sampled (x, u)."""
        if self.growth_R is None:
            return 0.0
        x = grid.space_nodes()
        worst = 0.0
        bound_base = self.growth_R * np.exp(-self.delta * x)
        for u0 in u_samples:
            u = np.full_like(x, float(u0))
            bound = bound_base * (np.exp(self.r * x) + np.abs(u))
            for sig in (self.sigma1, self.sigma2):
                worst = max(worst, float(np.max(np.abs(sig(x, u)) - bound)))
        return worst


def constant_coefficients(f: float = 0.0, sigma: float = 1.0, **meta) -> ModelCoefficients:
    """Spatially homogeneous drift/volatility, identical on both sides."""
    def drift(x, u):
        return np.full_like(np.asarray(x, dtype=float), f)

    def vol(x, u):
        return np.full_like(np.asarray(x, dtype=float), sigma)

    return ModelCoefficients(f1=drift, f2=drift, sigma1=vol, sigma2=vol, **meta)


def tabulated_coefficients(x_centers, f_values, sigma_values, **meta) -> ModelCoefficients:
    """Coefficients depending on the relative price only, linearly interpolated.

    Outside the tabulated range the end values are held constant.
    """
    xc = np.asarray(x_centers, dtype=float)
    fv = np.asarray(f_values, dtype=float)
    sv = np.asarray(sigma_values, dtype=float)

    def drift(x, u):
        return np.interp(np.asarray(x, dtype=float), xc, fv)

    def vol(x, u):
        return np.interp(np.asarray(x, dtype=float), xc, sv)

    return ModelCoefficients(f1=drift, f2=drift, sigma1=vol, sigma2=vol, **meta)


@dataclass
class CoupledState:
    """Profile pair in the relative frame plus boundary bookkeeping."""

    v1: np.ndarray
    v2: np.ndarray
    p: float
    p_prime: float = 0.0
    time: float = 0.0
    blown_up: bool = False
    tau_estimate: float | None = None

    def copy(self) -> "CoupledState":
        return dataclasses.replace(self, v1=self.v1.copy(), v2=self.v2.copy())


def weighted_norm(profile: np.ndarray, grid: GridSpec, r: float) -> float:
    """sup over grid nodes of exp(-r x) |u(x)| (half-line solution norm)."""
    if grid.domain_kind == COMPACT:
        raise GridMismatch("weighted norm is defined for half-line grids")
    profile = grid.check_profile(profile)
    return float(np.max(np.exp(-r * grid.space_nodes()) * np.abs(profile)))


def profile_norm(profile: np.ndarray, grid: GridSpec) -> float:
    """Domain-appropriate norm: sup on compact, weighted sup on half-line."""
    if grid.domain_kind == COMPACT:
        return float(np.max(np.abs(profile)))
    return weighted_norm(profile, grid, grid.weight_r)


def resolve_truncation(boundary_fn: BoundaryFunctional, M: float) -> BoundaryFunctional:
    """Push the run-level truncation M into the functional; reject conflicts."""
    if boundary_fn.truncation_M is not None and boundary_fn.truncation_M != M:
        raise ConfigError(
            f"boundary functional truncation {boundary_fn.truncation_M} "
            f"differs from run truncation M={M}"
        )
    if boundary_fn.truncation_M is None and np.isfinite(M):
        return dataclasses.replace(boundary_fn, truncation_M=float(M))
    return boundary_fn


def cap_profile(v: np.ndarray, grid: GridSpec, M: float) -> np.ndarray:
    """Truncate a profile: v ^ M on the compact domain, F_{M,r} on the half-line."""
    if not np.isfinite(M):
        return v
    if grid.domain_kind == COMPACT:
        return np.minimum(v, M)
    return F_Mr(v, grid, M, grid.weight_r)


def step_reflected(state: CoupledState, coeffs: ModelCoefficients,
                   boundary_fn: BoundaryFunctional, M: float,
                   noise_slice_1: np.ndarray, noise_slice_2: np.ndarray,
                   grid: GridSpec, lap_scale: float = 1.0,
                   M_max: float = np.inf) -> CoupledState:
    """Advance the coupled state by one explicit Euler step."""
    if state.blown_up:
        raise AlreadyBlownUp(f"state blew up at t={state.tau_estimate}")
    if noise_slice_1.shape != (grid.n_nodes,) or noise_slice_2.shape != (grid.n_nodes,):
        raise DimensionMismatch("noise slices must match the grid's node count")
    dx, dt = grid.dx, grid.dt
    x = grid.space_nodes()
    fn = resolve_truncation(boundary_fn, M)

    c = eval_h(fn, state.v1, state.v2, grid)
    if abs(c) * dt > dx * (1 + 1e-12):
        raise CflViolation(
            f"advection speed |c|={abs(c):.3g} violates dt*|c| <= dx at t={state.time:.6g}"
        )

    w1 = cap_profile(state.v1, grid, M)
    w2 = cap_profile(state.v2, grid, M)
    v1 = (state.v1
          + dt * (lap_scale * laplacian(state.v1, dx)
                  - c * upwind_gradient(w1, dx, c)
                  + coeffs.f1(x, state.v1))
          + dt * coeffs.sigma1(x, state.v1) * noise_slice_1)
    v2 = (state.v2
          + dt * (lap_scale * laplacian(state.v2, dx)
                  + c * upwind_gradient(w2, dx, -c)
                  + coeffs.f2(x, state.v2))
          + dt * coeffs.sigma2(x, state.v2) * noise_slice_2)

    np.maximum(v1, 0.0, out=v1)
    np.maximum(v2, 0.0, out=v2)
    v1[0] = v1[-1] = 0.0
    v2[0] = v2[-1] = 0.0

    p_prime = eval_h(fn, v1, v2, grid)
    new = CoupledState(v1=v1, v2=v2,
                       p=advance_p(state.p, p_prime, dt),
                       p_prime=p_prime,
                       time=state.time + dt)
    if profile_norm(v1, grid) + profile_norm(v2, grid) >= M_max:
        new.blown_up = True
        new.tau_estimate = new.time
    return new


@dataclass
class Trajectory:
    """Recorded output of one coupled run."""

    grid: GridSpec
    seed: int
    M: float
    M_max: float
    lap_scale: float
    times: np.ndarray = field(repr=False)
    p: np.ndarray = field(repr=False)
    p_prime: np.ndarray = field(repr=False)
    norm1: np.ndarray = field(repr=False)
    norm2: np.ndarray = field(repr=False)
    blown_up: bool = False
    tau_estimate: float | None = None
    stride: int = 0
    snapshot_times: np.ndarray | None = None
    v1_snapshots: np.ndarray | None = None
    v2_snapshots: np.ndarray | None = None
    final_state: CoupledState | None = None

    def to_csv(self, path, header_comment: str | None = None) -> None:
        """Long-format per-step record (step, t, p, p_prime, norm1, norm2)."""
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            writer = csv.writer(fh)
            writer.writerow(["step", "t", "p", "p_prime", "norm1", "norm2"])
            for i in range(len(self.times)):
                writer.writerow([i, f"{self.times[i]:.10g}", f"{self.p[i]:.17g}",
                                 f"{self.p_prime[i]:.17g}", f"{self.norm1[i]:.17g}",
                                 f"{self.norm2[i]:.17g}"])

    def profiles_to_csv(self, path, header_comment: str | None = None) -> None:
        """Per-stride profile dump (t, x, v1, v2); requires stride > 0."""
        if self.v1_snapshots is None:
            raise ValueError("trajectory was run without profile storage")
        xs = self.grid.space_nodes()
        with open(path, "w", newline="") as fh:
            if header_comment:
                fh.write(f"# {header_comment}\n")
            writer = csv.writer(fh)
            writer.writerow(["t", "x", "v1", "v2"])
            for k, t in enumerate(self.snapshot_times):
                for j, x in enumerate(xs):
                    writer.writerow([f"{t:.10g}", f"{x:.10g}",
                                     f"{self.v1_snapshots[k, j]:.17g}",
                                     f"{self.v2_snapshots[k, j]:.17g}"])


def run_relative_frame(initial, coeffs: ModelCoefficients,
                       boundary_fn: BoundaryFunctional, M: float, M_max: float,
                       grid: GridSpec, seed: int, store_stride: int = 0,
                       lap_scale: float = 1.0,
                       noise_pair=None) -> Trajectory:
    """Integrate the coupled system over the whole grid horizon.

    ``initial`` is (v1_0, v2_0, p0).  Both driving noises derive from
    ``seed`` on independent streams, so the full trajectory is a pure
    function of (initial, coeffs, boundary_fn, M, M_max, grid, seed).
    Passing an explicit (NoiseField, NoiseField) pair overrides the
    seeded generation, which lets other schemes reuse one realisation.
    """
    v1_0, v2_0, p0 = initial
    v1_0 = grid.check_profile(v1_0)
    v2_0 = grid.check_profile(v2_0)
    if np.any(v1_0 < 0) or np.any(v2_0 < 0):
        raise ConfigError("initial profiles must be nonnegative")
    if v1_0[0] != 0 or v2_0[0] != 0 or v1_0[-1] != 0 or v2_0[-1] != 0:
        raise ConfigError("initial profiles must vanish at Dirichlet nodes")
    if not M <= M_max:
        raise ConfigError(f"truncation M={M} must not exceed M_max={M_max}")
    if lap_scale * grid.dt > 0.5 * grid.dx**2 * (1 + 1e-12):
        raise CflViolation("lap_scale * dt exceeds 0.5 * dx^2")
    if grid.domain_kind != COMPACT and coeffs.growth_R is not None:
        violation = coeffs.validate_growth(grid)
        if violation > 1e-9:
            raise ConfigError(
                f"volatility exceeds its growth envelope by {violation:.3g}"
            )

    if noise_pair is None:
        xi1 = sample_white_noise(grid, seed, stream=0).xi
        xi2 = sample_white_noise(grid, seed, stream=1).xi
    else:
        if noise_pair[0].grid != grid or noise_pair[1].grid != grid:
            raise GridMismatch("supplied noise does not live on the run grid")
        xi1, xi2 = noise_pair[0].xi, noise_pair[1].xi

    fn = resolve_truncation(boundary_fn, M)
    state = CoupledState(v1=v1_0.copy(), v2=v2_0.copy(), p=float(p0))
    state.p_prime = eval_h(fn, state.v1, state.v2, grid)

    nt = grid.nt
    times = np.zeros(nt + 1)
    p = np.zeros(nt + 1)
    pp = np.zeros(nt + 1)
    n1 = np.zeros(nt + 1)
    n2 = np.zeros(nt + 1)
    p[0], pp[0] = state.p, state.p_prime
    n1[0] = profile_norm(state.v1, grid)
    n2[0] = profile_norm(state.v2, grid)

    snaps_t, snaps1, snaps2 = [], [], []
    if store_stride > 0:
        snaps_t.append(0.0)
        snaps1.append(state.v1.copy())
        snaps2.append(state.v2.copy())

    steps_done = 0
    for i in range(nt):
        state = step_reflected(state, coeffs, fn, M, xi1[i], xi2[i], grid,
                               lap_scale=lap_scale, M_max=M_max)
        steps_done = i + 1
        times[steps_done] = state.time
        p[steps_done] = state.p
        pp[steps_done] = state.p_prime
        n1[steps_done] = profile_norm(state.v1, grid)
        n2[steps_done] = profile_norm(state.v2, grid)
        if store_stride > 0 and (steps_done % store_stride == 0 or steps_done == nt):
            snaps_t.append(state.time)
            snaps1.append(state.v1.copy())
            snaps2.append(state.v2.copy())
        if state.blown_up:
            break

    end = steps_done + 1
    return Trajectory(
        grid=grid, seed=int(seed), M=float(M), M_max=float(M_max),
        lap_scale=float(lap_scale),
        times=times[:end], p=p[:end], p_prime=pp[:end],
        norm1=n1[:end], norm2=n2[:end],
        blown_up=state.blown_up, tau_estimate=state.tau_estimate,
        stride=int(store_stride),
        snapshot_times=np.array(snaps_t) if store_stride > 0 else None,
        v1_snapshots=np.array(snaps1) if store_stride > 0 else None,
        v2_snapshots=np.array(snaps2) if store_stride > 0 else None,
        final_state=state,
    )


def absolute_coordinates(p: float, grid: GridSpec, side: int) -> np.ndarray:
    """Map relative grid nodes to absolute positions: p - x (side 1), p + x (side 2)."""
    x = grid.space_nodes()
    if side == 1:
        return p - x
    if side == 2:
        return p + x
    raise ValueError("side must be 1 or 2")
