"""Few-photon scattering from driven quantum systems coupled to waveguides."""
__version__ = "0.1.0"

from .analytic_tls import TlsParams, tls_amplitude, tls_p0_exact, tls_pm_closed
from .model import (DriveSpec, SystemModel, WaveguideCoupling, build_custom,
                    build_pair_source, build_tls, h_eff)
from .observables import (SchmidtSpectrum, UndefinedValueError, flux, flux_trace, g2_grid,
                          g2_pulsewise, mean_photon_number, purity, schmidt)
from .propagator import (PropagatorGrid, TimeGrid, alpha_coefficients, build_grid,
                         evolve_state, interval_propagator)
from .scattering import (EmissionRecord, ScatteredState, amplitude, entangled_snapshot,
                         photocounts, scattered_state, snapshot_state)
from .trajectories import TrajectoryResult, estimate_photocounts, sample_trajectory

__all__ = [
    "TlsParams", "tls_amplitude", "tls_p0_exact", "tls_pm_closed",
    "DriveSpec", "SystemModel", "WaveguideCoupling", "build_custom", "build_pair_source",
    "build_tls", "h_eff",
    "SchmidtSpectrum", "UndefinedValueError", "flux", "flux_trace", "g2_grid", "g2_pulsewise",
    "mean_photon_number", "purity", "schmidt",
    "PropagatorGrid", "TimeGrid", "alpha_coefficients", "build_grid", "evolve_state",
    "interval_propagator",
    "EmissionRecord", "ScatteredState", "amplitude", "entangled_snapshot", "photocounts",
    "scattered_state", "snapshot_state",
    "TrajectoryResult", "estimate_photocounts", "sample_trajectory",
]
