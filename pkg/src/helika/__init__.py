"""helika: a k-space toolkit for transverse photon wavefunctions.

Builds sampled k-space domains, the axis-determined polarization frames
and their quasi-unitary transforms, two-component and three-component
photon states, the full observable algebra (momentum, canonical and
laboratory position, Berry connection, spin, orbital pieces), the two
classes of frame-change transformations, and real-space Maxwell field
reconstruction with cross-checks.
"""

from .config import Config
from .errors import *  # noqa: F401,F403
from .kgrid import (
    Field,
    KGrid,
    build_box_grid,
    build_spherical_grid,
    gradient,
    grid_from_json,
    grid_to_json,
    quadrature,
)
from .frames import (
    ALPHA,
    SIGMA,
    Frame,
    frame_rotation_angle,
    helicity_matrix_lab,
    polarization_frame,
    quasi_unitary,
    rotation_matrix,
    varpi_field,
)
from .states import (
    GaussianPacket,
    PlaneWaveProxy,
    SphericalMode,
    TwoCompState,
    VectorState,
    build_state,
    evolve,
    inner,
    load_state,
    norm,
    save_state,
    to_intrinsic,
    to_lab,
    transversality_residual,
)
from .operators import (
    BerryConnection,
    ObservableReport,
    apply,
    barycenter,
    berry_curvature,
    berry_potential,
    closed_form_curvature,
    commutator_expect,
    expect,
    expect_value,
    monopole_flux,
    plane_wave_barycenter,
)
from .gauge import (
    GaugeField,
    berry_phase_extract,
    first_class,
    gauge_field,
    gauge_shift_residual,
    second_class,
)
from .verify import (
    CheckResult,
    SUITES,
    run_suite,
    run_suites,
    standard_family,
)
from .fields import (
    FieldSnapshot,
    RealGrid,
    kspace_energy,
    maxwell_residuals,
    realspace_angular_momentum,
    realspace_energy,
    reconstruct,
    vector_potential,
)

__version__ = "0.1.0"
