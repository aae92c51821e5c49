"""Implicit-explicit Runge-Kutta stage machinery and the three built-in
double Butcher tableaux (one-stage SP, two-stage L-stable DIRK2, and the
four-stage third-order stiffly accurate DIRK).

Each stage has a single flux k_i combining the explicit and implicit parts;
the caller's H callback computes it, performing whatever linear solve the
implicit part requires:

    k_i = H(q_E^i, q_I^i, a_ii * dt)   with
    q_E^i = q^n + dt * sum_{j<i} aex[i,j] k_j
    q_I^i = q^n + dt * sum_{j<i} aim[i,j] k_j

All tableaux are stiffly accurate (last implicit row equals b), so the
update is just the last stage value.
"""

from dataclasses import dataclass

import numpy as np

__all__ = ["ButcherPair", "tableau", "imex_advance", "SCHEMES"]


@dataclass(frozen=True)
class ButcherPair:
    name: str
    a_ex: np.ndarray
    a_im: np.ndarray
    b: np.ndarray
    c_ex: np.ndarray
    c_im: np.ndarray

    @property
    def stages(self):
        return len(self.b)


_GAMMA2 = 1.0 - 1.0 / np.sqrt(2.0)
_BETA2 = 1.0 / (2.0 * _GAMMA2)
_GAMMA3 = 0.435866  # stiffly accurate 3rd-order DIRK root, 6-digit table value


def _pair(name, a_ex, a_im, b, c_ex, c_im):
    return ButcherPair(name,
                       np.array(a_ex, dtype=float),
                       np.array(a_im, dtype=float),
                       np.array(b, dtype=float),
                       np.array(c_ex, dtype=float),
                       np.array(c_im, dtype=float))


SCHEMES = {
    "SP111": _pair(
        "SP111",
        [[0.0]],
        [[1.0]],
        [1.0],
        [0.0],
        [1.0],
    ),
    "LSDIRK222": _pair(
        "LSDIRK222",
        [[0.0, 0.0],
         [_BETA2, 0.0]],
        [[_GAMMA2, 0.0],
         [1.0 - _GAMMA2, _GAMMA2]],
        [1.0 - _GAMMA2, _GAMMA2],
        [0.0, _BETA2],
        [_GAMMA2, 1.0],
    ),
    "SADIRK343": _pair(
        "SADIRK343",
        [[0.0, 0.0, 0.0, 0.0],
         [_GAMMA3, 0.0, 0.0, 0.0],
         [1.437745, -0.719812, 0.0, 0.0],
         [0.916993, 0.5, -0.416993, 0.0]],
        [[_GAMMA3, 0.0, 0.0, 0.0],
         [0.0, _GAMMA3, 0.0, 0.0],
         [0.0, 0.282066, _GAMMA3, 0.0],
         [0.0, 1.208496, -0.644363, _GAMMA3]],
        [0.0, 1.208496, -0.644363, _GAMMA3],
        [0.0, _GAMMA3, 0.717933, 1.0],
        [_GAMMA3, _GAMMA3, 0.717932, 0.999999],
    ),
}


def tableau(scheme: str) -> ButcherPair:
    """Look up a built-in IMEX tableau by name (case-insensitive)."""
    try:
        return SCHEMES[str(scheme).upper()]
    except KeyError:
        raise ValueError(
            f"unknown IMEX scheme {scheme!r}; available: {sorted(SCHEMES)}") from None


def imex_advance(state, dt, H, tab: ButcherPair):
    """One IMEX step of the state vector; returns the new state.

    H(q_E, q_I, aii_dt) must return the stage flux k_i, solving
    k = F_ex(q_E) + F_im(q_I + aii_dt * k) internally.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    s = tab.stages
    k = []
    for i in range(s):
        q_ex = state.copy()
        q_im = state.copy()
        for j in range(i):
            if tab.a_ex[i, j]:
                q_ex = q_ex + (dt * tab.a_ex[i, j]) * k[j]
            if tab.a_im[i, j]:
                q_im = q_im + (dt * tab.a_im[i, j]) * k[j]
        k.append(H(q_ex, q_im, tab.a_im[i, i] * dt))
    out = state.copy()
    for j in range(s):
        if tab.b[j]:
            out = out + (dt * tab.b[j]) * k[j]
    return out
