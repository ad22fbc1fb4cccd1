# SPDX-License-Identifier: Apache-2.0
"""Exceptions raised by the samsde library"""


class SamSdeError(Exception):
    """Base class for all library errors"""


class NotSymmetricError(SamSdeError, ValueError):
    def __init__(self, asymmetry: float) -> None:
        super().__init__(f"matrix is not symmetric (relative asymmetry {asymmetry:.3e})")
        self.asymmetry = asymmetry


class IndefiniteCovarianceError(SamSdeError, ValueError):
    """Assembled covariance has an eigenvalue below the clamp tolerance

    Usually means ρ is too large for the first-order covariance expansion.
    """

    def __init__(self, min_eigval: float, clamp_tol: float) -> None:
        super().__init__(
            f"indefinite covariance: most negative eigenvalue {min_eigval:.6e} "
            f"is below -{clamp_tol:.1e}"
        )
        self.min_eigval = min_eigval
        self.clamp_tol = clamp_tol


class DivergenceError(SamSdeError, ArithmeticError):
    def __init__(self, step: int, trajectories: list[int] | None = None) -> None:
        msg = f"non-finite state at step {step}"
        if trajectories:
            msg += f" (trajectories {trajectories[:10]}{'...' if len(trajectories) > 10 else ''})"
        super().__init__(msg)
        self.step = step
        self.trajectories = trajectories or []


class NonNormalizableError(SamSdeError, ValueError):
    def __init__(self, eigval: float, rho: float) -> None:
        super().__init__(
            f"stationary law is not normalizable: λ(1+ρλ) = {eigval * (1 + rho * eigval):.6e} <= 0 "
            f"(λ={eigval}, ρ={rho})"
        )
        self.eigval = eigval
        self.rho = rho


class OracleKindError(SamSdeError, ValueError):
    """SDE variant needs a different gradient oracle"""


class DatasetError(SamSdeError, ValueError):
    def __init__(self, msg: str, line: int | None = None) -> None:
        if line is not None:
            msg = f"line {line}: {msg}"
        super().__init__(msg)
        self.line = line


class DimensionMismatchError(SamSdeError, ValueError):
    """Model architecture does not fit its dataset or parameter vector"""


class LengthMismatchError(SamSdeError, ValueError):
    def __init__(self, len_a: int, len_b: int) -> None:
        super().__init__(f"series lengths differ: {len_a} != {len_b}")
        self.len_a = len_a
        self.len_b = len_b
