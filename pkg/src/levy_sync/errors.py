"""Exception types shared across the package."""


class LevySyncError(Exception):
    """Base class for all package errors."""


class MomentOrderError(LevySyncError, ValueError):
    """Raised when an L^p estimate is requested with p >= alpha.

    Symmetric alpha-stable laws have infinite p-th absolute moments for
    p >= alpha, so the requested estimator is meaningless.
    """


class DivergenceError(LevySyncError, RuntimeError):
    """Too many paths (or steps) reached non-finite values."""


class SeedMismatchError(LevySyncError, ValueError):
    """Two path families were not generated from matching seed streams."""


class HypothesisViolation(LevySyncError, ValueError):
    """A probe point falsified one of the drift hypotheses.

    Attributes:
        hypothesis: short name, e.g. "H.2".
        witness: the probe point that falsified the condition.
    """

    def __init__(self, hypothesis, witness, detail=""):
        self.hypothesis = hypothesis
        self.witness = witness
        msg = f"{hypothesis} violated at {witness}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class FitError(LevySyncError, RuntimeError):
    """A decay-curve fit failed (non-monotone data beyond noise level)."""


class NotRelaxed(LevySyncError, RuntimeError):
    """Two late-time marginals were still distinguishable (KS test failed)."""


class ConfigError(LevySyncError, ValueError):
    """Base for configuration problems."""


class ParseError(ConfigError):
    """Config document is not well formed."""


class ValidationError(ConfigError):
    """Config parsed but violates an invariant (names the field)."""
