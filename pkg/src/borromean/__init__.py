"""Three-body bound states of two bosons and a distinguishable particle in
one dimension, interacting through an attractive and a repulsive contact
term.  Momentum-space Faddeev equations with a rank-two separable t-matrix.
"""

from .errors import (
    AliasingError,
    BorromeanError,
    ConvergenceError,
    DomainError,
    InsufficientPoints,
    NoBorromeanState,
    PoleAtHalf,
    PoleProximity,
    ProvenanceError,
    WrongSpace,
)
from .faddeev import (
    MassConfig,
    MomentumGrid,
    assemble_kernel,
    build_composite_grid,
    build_grid,
    characteristic_value,
    default_grid,
    find_spectrum,
)
from .observables import GeometryReport, geometry, state_geometry
from .scan import (
    PowerLawFit,
    WindowRecord,
    find_alpha_w,
    fit_power_law,
    map_borromean_window,
    mass_ratio_sweep,
    spectrum_curve,
)
from .twobody import (
    PotentialParams,
    Region,
    StateKind,
    TwoBodyState,
    alpha_critical,
    region_of,
    solve_two_body,
)
from .wavefunction import (
    Space,
    WaveFieldGrid,
    faddeev_component,
    momentum_wavefunction,
    position_wavefunction,
)

__version__ = "0.1.0"
