class ResetConfig:
    """Tolerances and run defaults shared by the kernel, simulator and analysis"""

    # Matrix kernel accuracy targets, asserted by the tests rather than enforced at runtime
    EXPM_TOL = 1e-12
    EIG_TOL = 1e-10

    # Matrix kernel
    SOLVE_COND_MAX = 1e14
    LSTSQ_RCOND = None  # LAPACK default (machine precision based)

    # Reset law
    DELTA_M_DEFAULT = 1e-6
    CONVERGENCE_N_GRID = 400
    CONVERGENCE_GRID_FLOOR = 1e-6  # grid starts at delta_max * floor
    CONVERGENCE_MARGIN = 1e-12

    # Simulation
    N_PERIODS_DEFAULT = 20
    SAMPLES_PER_PERIOD_DEFAULT = 4096  # must be a multiple of 4 (Simpson per half-period)
    STEADY_STATE_TOL = 1e-10
    MAX_PERIODS = 2000
    EVENT_XTOL = 1e-12
    BOUNDARY_SNAP = 1e-9  # fraction of a half-period

    # Decomposition / HOSIDF
    SCALING_SAMPLES_DEFAULT = 64
    HARMONICS_DEFAULT = 9
    VALIDATE_TOL_DEFAULT = 1e-3

    # Export
    CSV_FLOAT_FORMAT = "%.17g"
    TRACE_SECTION_MARKER = "# steady_state_window"
