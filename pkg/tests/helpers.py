"""Shared oracles and generators for the test suite."""
import numpy as np

from stefansim.grids import Field, GridSpec


def fbm_path(hurst: float, n: int, seed: int, dt: float = 1.0) -> np.ndarray:
    """Exact fractional Brownian motion via circulant embedding.

    Builds fractional Gaussian noise from the eigenvalues of the circulant
    extension of its covariance, then cumulates.  Independent of the
    structure-function estimator under test.
    """
    k = np.arange(n + 1, dtype=float)
    gamma = 0.5 * (np.abs(k + 1) ** (2 * hurst) - 2 * np.abs(k) ** (2 * hurst)
                   + np.abs(k - 1) ** (2 * hurst))
    row = np.concatenate([gamma, gamma[-2:0:-1]])
    eig = np.fft.fft(row).real
    if eig.min() < -1e-8:
        raise ValueError("circulant embedding failed; increase n")
    eig = np.maximum(eig, 0.0)
    m = len(row)
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    noise = np.fft.fft(np.sqrt(eig / (2 * m)) * z)
    fgn = noise.real[:n] * np.sqrt(2.0)
    return np.concatenate([[0.0], np.cumsum(fgn)]) * dt**hurst


def random_smooth_obstacle(grid: GridSpec, seed: int, amplitude: float = 1.0,
                           n_modes: int = 4) -> Field:
    """Random Fourier obstacle, zero at t = 0 and at the spatial boundary."""
    rng = np.random.default_rng(seed)
    t = grid.time_nodes()[:, None]
    x = grid.space_nodes()[None, :]
    values = np.zeros((grid.nt + 1, grid.n_nodes))
    for k in range(1, n_modes + 1):
        a = amplitude * rng.uniform(-1.0, 1.0) / k
        freq = rng.uniform(0.5, 3.0) / grid.T
        phase = rng.uniform(0, 2 * np.pi)
        values += a * np.sin(k * np.pi * x / grid.length) * np.sin(
            2 * np.pi * freq * t + phase)
    envelope = np.minimum(t / (0.1 * grid.T), 1.0)
    values *= envelope
    return Field(grid, values)


def sine_ramp_obstacle(grid: GridSpec, amplitude: float = 5.0,
                       ramp: float = 0.02) -> Field:
    """The standard test obstacle amplitude * sin(pi x) * min(t, ramp)."""
    f = Field.from_function(
        grid, lambda t, x: amplitude * np.sin(np.pi * x / grid.length) * np.minimum(t, ramp))
    f.values[:, 0] = 0.0
    f.values[:, -1] = 0.0
    return f


def synthetic_lob_rows(f_bins, sigma_bins, horizon: float, seed: int,
                       interval: float = 1.0, sides=("bid",)):
    """Event rows realising piecewise-constant net flow f + sigma * noise.

    Per bin and per interval the net volume f*D*dt + sigma*sqrt(D*dt)*Z is
    booked as one limit (positive) or cancel (negative) event at the bin
    centre, independently per side, so the fitter's estimand matches the
    generator's (f, sigma) exactly.
    """
    n_bins = len(f_bins)
    width = 1.0 / n_bins
    rng = np.random.default_rng(seed)
    n_int = int(round(horizon / interval))
    rows = []
    for i in range(n_int):
        t = (i + 0.5) * interval
        for b in range(n_bins):
            xc = (b + 0.5) * width
            for side in sides:
                net = (f_bins[b] * width * interval
                       + sigma_bins[b] * np.sqrt(width * interval) * rng.standard_normal())
                if net == 0.0:
                    continue
                etype = "limit" if net > 0 else "cancel"
                rows.append(f"{t},{side},{etype},{xc},{abs(net)}")
    return rows
