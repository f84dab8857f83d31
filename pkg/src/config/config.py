import os


class Config:
    """
    Numerical defaults shared by every module, overridable from the environment.
    """

    # Comparison tolerance for floating-point maps; dyadic maps compare exactly.
    TOLERANCE = float(os.environ.get("THERMO_TOLERANCE", "1e-12"))
    # Tower domains are identified when both endpoints agree within this
    # multiple of TOLERANCE.
    IDENTIFICATION_FACTOR = float(
        os.environ.get("THERMO_IDENTIFICATION_FACTOR", "10")
    )
    MAX_CYLINDERS = int(os.environ.get("THERMO_MAX_CYLINDERS", str(2**20)))

    # Series divergence policy
    DIVERGENCE_CEILING = float(os.environ.get("THERMO_DIVERGENCE_CEILING", "1e6"))
    FIT_RESIDUAL = float(os.environ.get("THERMO_FIT_RESIDUAL", "0.05"))

    # Spectral toolkit
    ROME_PATH_CAP = int(os.environ.get("THERMO_ROME_PATH_CAP", "200000"))
    POWER_MAX_ITER = int(os.environ.get("THERMO_POWER_MAX_ITER", "100000"))
    POWER_TOLERANCE = float(os.environ.get("THERMO_POWER_TOLERANCE", "1e-13"))

    # Root finding for P(φ)
    ROOT_TOLERANCE = float(os.environ.get("THERMO_ROOT_TOLERANCE", "1e-12"))
    PERIODIC_BRACKET_PERIOD = int(
        os.environ.get("THERMO_PERIODIC_BRACKET_PERIOD", "6")
    )

    # Sampling used for sup/inf of custom pointwise potentials
    SAMPLES_PER_PIECE = int(os.environ.get("THERMO_SAMPLES_PER_PIECE", "33"))

    # Only environment override the CLI honours for runs
    OUTPUT_DIR = os.environ.get("THERMO_OUTPUT_DIR", "results")
