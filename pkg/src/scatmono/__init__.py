"""Semiclassical phase shifts, deflection angles and scattering monodromy
for planar scattering off smooth repulsive central potentials."""

from .actions import (
    GridRow,
    d_delta_w_dl,
    delta_w,
    delta_w_smoothed,
    grid_scan,
    limit_dl,
    one_sided_slope,
    phase_portrait,
    reduce_mod_pi,
    time_delay,
    wkb_phase_shift,
)
from .lattice import (
    LatticeCell,
    LatticeError,
    LatticePoint,
    MonodromyMatrix,
    TransportResult,
    ZeroLattice,
    make_cell,
    transport_cell,
    zero_curves,
)
from .orbits import (
    HolonomyReport,
    LoopPath,
    Trajectory,
    deflection_integral,
    holonomy_report,
    integrate_orbit,
    loop_holonomy,
    rectangle,
)
from .potential import (
    DEFAULT_HBAR,
    DEFAULT_MU,
    ConvergenceError,
    DomainError,
    PotentialModel,
    ScatterPoint,
    critical_data,
    custom_potential,
    evaluate,
    lorentzian,
    radial_function,
    turning_point,
    zero_potential,
)
from .quadrature import ActionValue, QuadratureSpec
from .quantum import ComparisonRow, MeshSpec, RadialSolution, bessel_order, compare_wkb, solve_radial

__version__ = "0.1.0"
