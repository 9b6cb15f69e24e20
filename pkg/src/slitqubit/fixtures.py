"""Published reference data: coincidence tables, density matrices and the setup geometry."""

from __future__ import annotations

import numpy as np

from .optics import OpticalGeometry
from .quantum import psi_slits

WAVELENGTH = 810e-9
SLIT_WIDTH = 40e-6
SLIT_SEPARATION = 150e-6
FOCAL_LENGTH = 50e-3
SLIT_TO_LENS = 2 * FOCAL_LENGTH
DETECTOR_SLIT_PAULI = 40e-6
DETECTOR_SLIT_SCAN = 20e-6

# rows: fixed arm-B setting, columns: scanning arm-A setting; order l, r, +, -, +i, -i
TABLE_1A = np.array(
    [
        [77, 14838, 995, 999, 957, 967],
        [14885, 66, 993, 888, 953, 970],
        [1032, 1071, 643, 22, 340, 288],
        [1050, 986, 22, 595, 290, 313],
        [1063, 1053, 309, 308, 554, 29],
        [1008, 1049, 320, 276, 17, 576],
    ]
)

TABLE_1B = np.array(
    [
        [0.003, 0.497, 0.253, 0.262, 0.252, 0.248],
        [0.498, 0.002, 0.252, 0.233, 0.251, 0.249],
        [0.245, 0.255, 0.486, 0.017, 0.275, 0.227],
        [0.258, 0.242, 0.017, 0.480, 0.243, 0.255],
        [0.258, 0.256, 0.254, 0.262, 0.484, 0.025],
        [0.238, 0.248, 0.256, 0.228, 0.014, 0.477],
    ]
)


def _hermitian_from_upper(upper) -> np.ndarray:
    u = np.triu(np.asarray(upper, dtype=complex))
    return u + np.triu(u, 1).conj().T


# Pauli-setting reconstruction, basis ll, lr, rl, rr
RHO_PAULI = _hermitian_from_upper(
    [
        [0.003, -0.005 - 0.007j, -0.006 + 0.000j, 0.002 - 0.006j],
        [0, 0.498, 0.463 - 0.024j, 0.009 + 0.001j],
        [0, 0, 0.497, 0.008 - 0.007j],
        [0, 0, 0, 0.002],
    ]
)

# reconstruction from six conditional scans at z = 1.8 f
RHO_SCANS = _hermitian_from_upper(
    [
        [0.008, 0.008 - 0.012j, 0.015 + 0.021j, -0.018 - 0.001j],
        [0, 0.485, 0.347 - 0.038j, 0.002 - 0.027j],
        [0, 0, 0.469, 0.008 + 0.005j],
        [0, 0, 0, 0.038],
    ]
)

FIDELITY_PAULI = 0.961
FIDELITY_SCANS = 0.824
CONDITIONAL_FIDELITIES = (0.887, 0.861, 0.841, 0.841, 0.871, 0.912)

# focal-plane detector positions quoted for the sigma_x / sigma_y settings
SIGMA_X_NODE = 135e-6
SIGMA_Y_POSITION = 67e-6


def reference_geometry(z: float = 1.8 * FOCAL_LENGTH) -> OpticalGeometry:
    """Double slit, lens at 2f, detector at ``z`` behind the lens."""
    return OpticalGeometry.double_slit(
        WAVELENGTH, SLIT_WIDTH, SLIT_SEPARATION, FOCAL_LENGTH, SLIT_TO_LENS, z
    )


TABLES = {"table1a": TABLE_1A, "table1b": TABLE_1B}
MATRICES = {"pauli": RHO_PAULI, "scans": RHO_SCANS}


def named_state(name: str) -> np.ndarray:
    """Density matrix for a fixture or preset name."""
    from .quantum import density, ket

    key = name.lower().removeprefix("fixtures/")
    if key in MATRICES:
        return MATRICES[key].copy()
    if key in ("psi-slits", "psi_slits"):
        return density(psi_slits())
    if key == "mixed":
        return np.eye(2, dtype=complex) / 2
    try:
        return density(ket(key))
    except ValueError:
        raise KeyError(f"unknown state name {name!r}") from None


def named_table(name: str) -> np.ndarray:
    key = name.lower().removeprefix("fixtures/")
    try:
        return TABLES[key].copy()
    except KeyError:
        raise KeyError(f"unknown table name {name!r}") from None
