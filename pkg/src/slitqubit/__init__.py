"""Spatial qubits encoded in which-slit paths: optics, POVMs, simulation and tomography."""

from .errors import (
    DimensionError,
    FitError,
    FocalPlaneSingularity,
    GeometryError,
    ImagePlaneSingularity,
    QuadratureError,
    RankDeficientFrame,
    SlitQubitError,
    TomographyError,
)
from .forward import (
    ScanRecord,
    conditional_state,
    detection_probability,
    joint_probability,
    normalize_block,
    prepared_state,
    simulate_conditional_scans,
    simulate_scan,
)
from .optics import (
    DerivedScales,
    OpticalGeometry,
    derive_scales,
    effective_length,
    envelope_scale,
    envelope_shift,
    fresnel_amplitude,
    sinc_amplitude,
    slit_amplitude,
)
from .povm import (
    Trajectory,
    bloch_trajectory,
    completeness_defect,
    focal_plane_state,
    measurement_effect,
    measurement_state,
)
from .quantum import (
    BlochPoint,
    bloch_of,
    density,
    depolarize,
    fidelity,
    ket,
    project_physical,
    psi_slits,
)
from .tomography import (
    DualFrame,
    Reconstruction,
    build_dual_frame,
    fit_conditional,
    octahedral_points,
    pattern_invert,
    pauli_reconstruct,
    reconstruct_from_scans,
    reconstruct_two_qubit,
)

__version__ = "0.1.0"
