from pieces.affine_piece import AffinePiece
from pieces.constant_piece import ConstantPiece
from pieces.custom_piece import CustomPiece
from pieces.dyadic_step_piece import DyadicStepPiece, dyadic_level
from pieces.log_derivative_piece import LogDerivativePiece
from pieces.power_piece import PowerPiece

__all__ = [
    "AffinePiece",
    "ConstantPiece",
    "CustomPiece",
    "DyadicStepPiece",
    "LogDerivativePiece",
    "PowerPiece",
    "dyadic_level",
]
