"""Exception hierarchy shared by every rgrl module."""


class RGRLError(Exception):
    """Base class for all errors raised by rgrl."""


class ContractError(RGRLError, ValueError):
    """An input violated a documented precondition (shape, symmetry, diagonal)."""


class ConfigError(RGRLError, ValueError):
    """A run or model configuration is invalid."""


class DataFormatError(RGRLError, ValueError):
    """A data file could not be parsed or contained invalid values."""


class NumericalError(RGRLError, ArithmeticError):
    """A numerical routine failed (non-convergence, non-finite values)."""


class TrainingError(NumericalError):
    """Training diverged.

    Parameters
    ----------
    stage : str
        ``"pretrain"`` or ``"finetune"``.
    epoch : int
        Zero-based epoch at which the loss became non-finite.
    """

    def __init__(self, stage, epoch, message=None):
        self.stage = stage
        self.epoch = epoch
        msg = message or "loss became non-finite"
        super().__init__(f"{stage} diverged at epoch {epoch}: {msg}")
