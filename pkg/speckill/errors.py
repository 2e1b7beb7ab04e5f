"""
errors.py

Exceptions raised across speckill. Every error carries a message and an error
code so the CLI can surface both.
"""

from __future__ import annotations

from typing import List, Optional, Sequence


class SpeckillError(Exception):
    """
    Base exception for all speckill errors. Subclasses set default_error_code
    to the CLI exit code they map to.
    """

    default_error_code = 1

    def __init__(self, message: str = "", error_code: Optional[int] = None):
        """
        Creates a new SpeckillError.

        Args:
            message (str): The error message to display.
            error_code (Optional[int]): The error code to exit with. Defaults
                to the class default.
        """
        self.message = message
        self.error_code = self.default_error_code if error_code is None else error_code
        super().__init__(f"{self.message}, Error code: {self.error_code}")


class InvalidParameterError(SpeckillError):
    """
    Raised when a numeric parameter (radius, epsilon, morse index, branch,
    plateau value, ...) is outside its admissible range.
    """

    default_error_code = 3


class InvalidProfileError(SpeckillError):
    """
    Raised when a radial profile violates its invariants.
    """

    default_error_code = 3


class RecappingError(SpeckillError):
    """
    Raised when a nontrivial recapping is requested on an aspherical model.
    """


class WindowOverflowError(SpeckillError):
    """
    Raised when an orbit winding number exceeds the configured l_window cap.
    """


class SchemaMismatchError(SpeckillError):
    """
    Raised when the premises of a bound rule do not match its schema.
    """


class MissingPremiseError(SpeckillError):
    """
    Raised when a derivation is requested without its required premise.
    """


class TheoremPreconditionError(SpeckillError):
    """
    Raised when balls violate E_i < |lambda|/2. Lists the offending ball ids.
    """

    default_error_code = 3

    def __init__(
        self, ball_ids: Sequence[str], message: str = "", error_code: Optional[int] = None
    ):
        self.ball_ids = list(ball_ids)
        if not message:
            message = (
                "Displacement energy bound E_i < |lambda|/2 fails for balls: "
                + ", ".join(self.ball_ids)
            )
        super().__init__(message, error_code)


class NotACoverError(SpeckillError):
    """
    Raised when the balls leave a grid point of the domain uncovered.
    """

    default_error_code = 3

    def __init__(
        self, witness: Sequence[float], message: str = "", error_code: Optional[int] = None
    ):
        self.witness = tuple(float(w) for w in witness)
        if not message:
            message = f"Balls do not cover the domain; uncovered grid point {self.witness}"
        super().__init__(message, error_code)


class ColoringError(SpeckillError):
    """
    Raised when a coloring produces more than d+1 families or a family with
    intersecting balls.
    """


class ConfigError(SpeckillError):
    """
    Raised when a run configuration is invalid. Holds every problem found,
    each prefixed by its field path.
    """

    default_error_code = 3

    def __init__(self, errors: List[str], error_code: Optional[int] = None):
        self.errors = list(errors)
        super().__init__("Invalid configuration: " + "; ".join(self.errors), error_code)