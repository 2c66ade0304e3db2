from .tape import Tape, TapeError, Var
from .checks import FiniteDiffReport, finite_diff_check, rel_error
from . import ops

__all__ = ["Tape", "TapeError", "Var", "FiniteDiffReport", "finite_diff_check",
           "rel_error", "ops"]
