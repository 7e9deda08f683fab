"""Exception types shared across the package."""


class PairRankError(Exception):
    """Base class for all pairrank errors."""


class ConfigError(PairRankError, ValueError):
    """Invalid configuration: bad dimensions, unknown variant, bad fractions."""


class DataError(PairRankError, ValueError):
    """Invalid or inconsistent input data: duplicates, empty sets, bad labels."""


class NumericError(PairRankError, ArithmeticError):
    """Non-finite value produced where the math requires a finite one."""


class UnknownIdError(PairRankError, KeyError):
    """Lookup of an item, judge, pair, or campaign id that does not exist."""


class PairingExhausted(PairRankError, RuntimeError):
    """A tournament round cannot be completed without repeating a pair."""


class ConflictError(PairRankError, RuntimeError):
    """A submission conflicts with recorded state (duplicate or expired)."""


class TrainingDiverged(PairRankError, ArithmeticError):
    """Training produced a non-finite loss."""
