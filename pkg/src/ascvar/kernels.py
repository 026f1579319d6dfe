"""In-place gate kernels over a flat complex128 amplitude array.

Every kernel exists twice: a numba ``@njit`` loop and a vectorised numpy
version. The module-level names (``ry``, ``h``, ...) bind to one of them at
import time according to :data:`ascvar._jit.USE_NUMBA`. Both sets stay
importable through :data:`NUMPY_KERNELS` and :data:`NUMBA_KERNELS` so they can
be cross-checked and benchmarked against each other.

Qubit ``q`` is bit ``q`` of the basis index (qubit 0 is least significant).
"""

import math

import numpy as np

from ._jit import HAVE_NUMBA, USE_NUMBA

# --------------------------------------------------------------------------
# numpy path
# --------------------------------------------------------------------------


def _pair_view(psi, qubit):
    # axis 1 selects the value of bit `qubit`
    return psi.reshape(-1, 2, 1 << qubit)


def ry_numpy(psi, qubit, theta):
    c = math.cos(0.5 * theta)
    s = math.sin(0.5 * theta)
    v = _pair_view(psi, qubit)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = c * a0 - s * a1
    v[:, 1, :] = s * a0 + c * a1


def h_numpy(psi, qubit):
    r = 1.0 / math.sqrt(2.0)
    v = _pair_view(psi, qubit)
    a0 = v[:, 0, :].copy()
    a1 = v[:, 1, :]
    v[:, 0, :] = r * (a0 + a1)
    v[:, 1, :] = r * (a0 - a1)


def cz_numpy(psi, q1, q2):
    idx = np.arange(psi.shape[0])
    both = ((idx >> q1) & 1) & ((idx >> q2) & 1)
    psi[both.astype(bool)] *= -1.0


def mixer_numpy(psi, n_qubits, beta):
    c = math.cos(beta)
    s = -1j * math.sin(beta)
    for q in range(n_qubits):
        v = _pair_view(psi, q)
        a0 = v[:, 0, :].copy()
        a1 = v[:, 1, :]
        v[:, 0, :] = c * a0 + s * a1
        v[:, 1, :] = s * a0 + c * a1


def phase_numpy(psi, energies, gamma):
    psi *= np.exp(-1j * gamma * energies)


def ry_layer_numpy(psi, thetas):
    for q in range(thetas.shape[0]):
        ry_numpy(psi, q, thetas[q])


def scale_real_numpy(psi, factors):
    psi *= factors


NUMPY_KERNELS = {
    "ry": ry_numpy,
    "h": h_numpy,
    "cz": cz_numpy,
    "mixer": mixer_numpy,
    "phase": phase_numpy,
    "ry_layer": ry_layer_numpy,
    "scale_real": scale_real_numpy,
}

# --------------------------------------------------------------------------
# numba path
# --------------------------------------------------------------------------

NUMBA_KERNELS = {}

if HAVE_NUMBA:
    from numba import njit

    @njit(cache=True, nogil=True)
    def _insert_zero(k, qubit):
        low = (1 << qubit) - 1
        return ((k & ~low) << 1) | (k & low)

    @njit(cache=True, nogil=True)
    def ry_numba(psi, qubit, theta):
        c = math.cos(0.5 * theta)
        s = math.sin(0.5 * theta)
        stride = 1 << qubit
        for k in range(psi.shape[0] >> 1):
            i0 = _insert_zero(k, qubit)
            i1 = i0 | stride
            a0 = psi[i0]
            a1 = psi[i1]
            psi[i0] = c * a0 - s * a1
            psi[i1] = s * a0 + c * a1

    @njit(cache=True, nogil=True)
    def h_numba(psi, qubit):
        r = 1.0 / math.sqrt(2.0)
        stride = 1 << qubit
        for k in range(psi.shape[0] >> 1):
            i0 = _insert_zero(k, qubit)
            i1 = i0 | stride
            a0 = psi[i0]
            a1 = psi[i1]
            psi[i0] = r * (a0 + a1)
            psi[i1] = r * (a0 - a1)

    @njit(cache=True, nogil=True)
    def cz_numba(psi, q1, q2):
        mask = (1 << q1) | (1 << q2)
        for i in range(psi.shape[0]):
            if (i & mask) == mask:
                psi[i] = -psi[i]

    @njit(cache=True, nogil=True)
    def mixer_numba(psi, n_qubits, beta):
        c = math.cos(beta)
        s = -1j * math.sin(beta)
        for q in range(n_qubits):
            stride = 1 << q
            for k in range(psi.shape[0] >> 1):
                i0 = _insert_zero(k, q)
                i1 = i0 | stride
                a0 = psi[i0]
                a1 = psi[i1]
                psi[i0] = c * a0 + s * a1
                psi[i1] = s * a0 + c * a1

    @njit(cache=True, nogil=True)
    def phase_numba(psi, energies, gamma):
        for i in range(psi.shape[0]):
            ang = -gamma * energies[i]
            psi[i] *= complex(math.cos(ang), math.sin(ang))

    @njit(cache=True, nogil=True)
    def ry_layer_numba(psi, thetas):
        for q in range(thetas.shape[0]):
            ry_numba(psi, q, thetas[q])

    @njit(cache=True, nogil=True)
    def scale_real_numba(psi, factors):
        for i in range(psi.shape[0]):
            psi[i] *= factors[i]

    NUMBA_KERNELS = {
        "ry": ry_numba,
        "h": h_numba,
        "cz": cz_numba,
        "mixer": mixer_numba,
        "phase": phase_numba,
        "ry_layer": ry_layer_numba,
        "scale_real": scale_real_numba,
    }

_ACTIVE = NUMBA_KERNELS if USE_NUMBA else NUMPY_KERNELS

ry = _ACTIVE["ry"]
h = _ACTIVE["h"]
cz = _ACTIVE["cz"]
mixer = _ACTIVE["mixer"]
phase = _ACTIVE["phase"]
ry_layer = _ACTIVE["ry_layer"]
scale_real = _ACTIVE["scale_real"]
