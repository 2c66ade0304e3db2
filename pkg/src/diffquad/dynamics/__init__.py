from .params import QuadParams, PRESETS, get_params, mixer_matrices, GRAVITY
from .state import QuadState
from .allocation import CtbrCommand, ctbr_allocate
from .model import (DynamicsError, StepInfo, derivative, drag_wrench,
                    integrate_step, motor_step, rotor_thrust_torque)
from . import rotation

__all__ = [
    "QuadParams", "PRESETS", "get_params", "mixer_matrices", "GRAVITY",
    "QuadState", "CtbrCommand", "ctbr_allocate", "DynamicsError", "StepInfo",
    "derivative", "drag_wrench", "integrate_step", "motor_step",
    "rotor_thrust_torque", "rotation",
]
