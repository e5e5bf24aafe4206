"""Exception hierarchy shared across the package."""


class RadiError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(RadiError):
    """Matrix dimensions are inconsistent or empty where data is required."""


class ShiftDomainError(RadiError):
    """A shift lies outside the open left half-plane."""


class SingularShiftError(RadiError):
    """The shifted coefficient matrix is singular or numerically singular."""

    def __init__(self, sigma, detail=""):
        self.sigma = complex(sigma)
        msg = f"shifted matrix is singular for shift {self.sigma}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class SmwBreakdownError(RadiError):
    """The SMW capacitance matrix is singular.

    Signals a shift too close to a closed-loop eigenvalue.
    """

    def __init__(self, sigma, detail=""):
        self.sigma = complex(sigma)
        msg = f"SMW capacitance matrix is singular for shift {self.sigma}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class RealShiftError(RadiError):
    """A real shift was handed to the conjugate-pair step."""


class SingularEError(RadiError):
    """The mass matrix E could not be factorized."""


class NoStableShiftError(RadiError):
    """The projected Hamiltonian has no eigenvalue in the left half-plane."""


class NoShiftsError(RadiError):
    """Shift precomputation produced no usable candidates."""


class OracleFailure(RadiError):
    """A dense reference computation broke down."""


class MatrixMarketError(RadiError):
    """Malformed Matrix Market file."""

    def __init__(self, path, lineno, detail):
        self.path = str(path)
        self.lineno = lineno
        super().__init__(f"{path}:{lineno}: {detail}")
