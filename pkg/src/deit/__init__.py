"""Double-EIT in a four-level tripod atom: spectra, slow light, storage, fits."""

from .errors import (
    ConfigError,
    DegenerateSteadyStateError,
    DeitError,
    IntegrationDivergedError,
    LinearityError,
    NoCrossingError,
    ParameterError,
    StepSizeError,
    ZeroEnergyError,
)
from .params import (
    DriveConfig,
    TripodParams,
    drives_from_mapping,
    load_config,
    params_from_mapping,
    parse_quantity,
    rabi_from_power,
    validate_drives,
    validate_params,
)
from .liouville import (
    DriveSchedule,
    EvolveResult,
    Segment,
    build_hamiltonian,
    build_liouvillian,
    dark_state,
    density_matrix_csv,
    dump_density_matrix,
    evolve,
    evolve_constant,
    max_stable_dt,
    steady_state,
    validate_density_matrix,
)
from .response import (
    BackgroundConfig,
    LineshapeSpectrum,
    WindowReport,
    doppler_average,
    export_spectrum_csv,
    find_window,
    group_delay,
    group_velocity,
    lineshape_spectrum,
    signal_group_delay,
    transmission,
    transparency_contrast,
    weak_probe_response,
)

__version__ = "0.1.0"
