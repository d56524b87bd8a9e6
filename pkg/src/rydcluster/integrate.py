"""Fixed-step classic RK4 for i d/dt psi = H(t) psi.

Two entry points share the sampling and norm-monitoring loop:

``rk4_evolve``
    ``apply_h(psi, t)`` is any Python callable returning ``H(t) psi``.
``rk4_evolve_jit``
    ``kernel(psi, t, out, params)`` is a numba-jitted function writing
    ``H(t) psi`` into ``out`` (all arrays flat). The steps between two
    samples then run entirely in compiled code.

Stage times are t, t + dt/2, t + dt/2, t + dt. Step times are computed as
``t0 + step * dt`` so no rounding accumulates over long runs.
"""

from __future__ import annotations

from typing import Callable, Optional

import numba
import numpy as np

from .errors import NumericalAbort
from .lattice import IntegratorParams

NORM_ABORT_TOL = 1e-4

Observer = Callable[[int, float, np.ndarray], None]


def rk4_step(apply_h, psi, t, dt):
    k1 = -1j * apply_h(psi, t)
    k2 = -1j * apply_h(psi + 0.5 * dt * k1, t + 0.5 * dt)
    k3 = -1j * apply_h(psi + 0.5 * dt * k2, t + 0.5 * dt)
    k4 = -1j * apply_h(psi + dt * k3, t + dt)
    return psi + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@numba.njit(cache=True)
def _rk4_chunk(kernel, params, psi, t0, dt, step0, n_steps, k, tmp, acc):
    """Advance ``psi`` (flat, in place) by ``n_steps`` steps starting at step ``step0``."""
    m = psi.size
    half = 0.5 * dt
    sixth = dt / 6.0
    for s in range(n_steps):
        t = t0 + (step0 + s) * dt
        kernel(psi, t, k, params)
        for i in range(m):
            acc[i] = k[i]
            tmp[i] = psi[i] - 1j * half * k[i]
        kernel(tmp, t + half, k, params)
        for i in range(m):
            acc[i] += 2.0 * k[i]
            tmp[i] = psi[i] - 1j * half * k[i]
        kernel(tmp, t + half, k, params)
        for i in range(m):
            acc[i] += 2.0 * k[i]
            tmp[i] = psi[i] - 1j * dt * k[i]
        kernel(tmp, t + dt, k, params)
        for i in range(m):
            psi[i] = psi[i] - 1j * sixth * (acc[i] + k[i])


def _sampled_loop(advance, psi0, ip: IntegratorParams, observer, t0, norm_tol, rebase=None):
    psi = np.array(psi0, dtype=np.complex128, copy=True)
    norm0 = float(np.vdot(psi, psi).real)
    if observer is not None:
        observer(0, t0, psi)
    n_steps = ip.n_steps
    step = 0
    while step < n_steps:
        chunk = min(ip.sample_stride, n_steps - step)
        if rebase is not None:
            rebase(psi, t0 + step * ip.dt)
        psi = advance(psi, step, chunk)
        step += chunk
        t = t0 + step * ip.dt
        drift = abs(float(np.vdot(psi, psi).real) - norm0)
        if not np.isfinite(drift) or drift > norm_tol:
            raise NumericalAbort(
                f"norm drift {drift:.3e} exceeds {norm_tol:.1e} at t={t:.6g}; "
                f"time step dt={ip.dt:g} is too large",
                t=t,
                value=drift,
            )
        if observer is not None:
            observer(step, t, psi)
    return psi


def rk4_evolve(
    apply_h: Callable[[np.ndarray, float], np.ndarray],
    psi0: np.ndarray,
    ip: IntegratorParams,
    observer: Optional[Observer] = None,
    *,
    t0: float = 0.0,
    norm_tol: float = NORM_ABORT_TOL,
) -> np.ndarray:
    """Integrate from ``t0`` to ``t0 + t_end`` and return the final state.

    ``observer(step, t, psi)`` is called at the start and after every
    ``sample_stride`` steps (and at the last step). Raises
    :class:`NumericalAbort` when the squared norm drifts by more than
    ``norm_tol`` at a sample point.
    """
    dt = ip.dt

    def advance(psi, step0, n):
        for s in range(n):
            psi = rk4_step(apply_h, psi, t0 + (step0 + s) * dt, dt)
        return psi

    return _sampled_loop(advance, psi0, ip, observer, t0, norm_tol)


class EnergyGauge:
    """Moving constant energy offset on a kernel's diagonal array.

    RK4 loses norm at a rate ~ (E dt)**6 / 72 per step for an eigen-energy
    E, so removing the current mean diagonal energy E0 from ``work`` cuts the
    dissipation without touching the physics: H - E0 only rotates the
    global phase. ``weights(psi)`` returns populations aligned with
    ``base``; ``phase`` accumulates int E0 dt so the true state is
    ``psi * exp(-1j * phase)``.
    """

    def __init__(self, base: np.ndarray, work: np.ndarray, weights: Callable[[np.ndarray], np.ndarray]):
        self.base = np.asarray(base, dtype=float)
        self.work = work
        self.weights = weights
        self.offset = 0.0
        self.phase = 0.0
        self._t = None

    def __call__(self, psi: np.ndarray, t: float) -> None:
        if self._t is not None:
            self.phase += self.offset * (t - self._t)
        self._t = t
        w = self.weights(psi)
        total = w.sum()
        self.offset = float(np.dot(w, self.base) / total) if total > 0 else 0.0
        np.subtract(self.base, self.offset, out=self.work)

    def restore(self, psi: np.ndarray, t_end: float) -> np.ndarray:
        """Undo the accumulated offset phase on the state reached at ``t_end``."""
        phase = self.phase + (self.offset * (t_end - self._t) if self._t is not None else 0.0)
        return psi * np.exp(-1j * phase)


def rk4_evolve_jit(
    kernel,
    params: tuple,
    psi0: np.ndarray,
    ip: IntegratorParams,
    observer: Optional[Observer] = None,
    *,
    t0: float = 0.0,
    norm_tol: float = NORM_ABORT_TOL,
    rebase: Optional[Callable[[np.ndarray, float], None]] = None,
) -> np.ndarray:
    """Same contract as :func:`rk4_evolve` for a compiled ``kernel``.

    The state keeps its shape; the kernel sees flat contiguous views.
    ``rebase(psi, t)`` runs before every chunk and may update arrays held
    in ``params`` in place (see :class:`EnergyGauge`).
    """
    shape = np.shape(psi0)
    size = int(np.prod(shape))
    k = np.empty(size, dtype=np.complex128)
    tmp = np.empty_like(k)
    acc = np.empty_like(k)

    def advance(psi, step0, n):
        flat = psi.reshape(-1)
        _rk4_chunk(kernel, params, flat, t0, ip.dt, step0, n, k, tmp, acc)
        return flat.reshape(shape)

    return _sampled_loop(advance, psi0, ip, observer, t0, norm_tol, rebase)
