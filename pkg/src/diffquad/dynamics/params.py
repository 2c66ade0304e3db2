"""Physical parameters of the simulated quadrotor.

Two built-in presets carry the identified constants of the reference
hardware: "vis-h" (470 g offboard airframe) and "vis-r" (750 g onboard
airframe). Both share the same motor/propeller stack, so the thrust map,
motor time constant and speed limits are identical between them.
"""

from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

GRAVITY = np.array([0.0, 0.0, -9.81])


@dataclass(frozen=True)
class QuadParams:
    """Identified constants of one airframe. SI units throughout."""

    m: float                      # mass [kg]
    J: tuple                      # diagonal inertia [kg m^2]
    r_arm: float = 0.075          # motor arm length [m]
    k_f: tuple = (4.04e-7, 2.56e-5, -2.62e-2)   # thrust map (k2, k1, k0): N s^2/rad^2, N s/rad, N
    k_tau: tuple = (0.016 * 4.04e-7, 0.0, 0.0)  # torque map (k2, k1, k0); ratio-derived default
    k_motor: float = 0.035        # first-order motor time constant [s]
    omega_max: float = 4200.0     # max rotor speed [rad/s]
    f_max: float = 5.12           # max thrust per motor [N], clamp
    k_drag: tuple = (0.05, 0.05, 1.15)          # second-order body drag coefficients
    k_omega_damp: tuple = (1e-4, 1e-4, 2e-4)    # linear rotational damping [N m s]
    kp_omega: tuple = (20.0, 20.0, 8.0)         # body-rate inner-loop P gains [1/s]
    g: tuple = (0.0, 0.0, -9.81)

    def __post_init__(self):
        if self.m <= 0:
            raise ValueError("mass must be positive")
        if any(j <= 0 for j in self.J):
            raise ValueError("inertia must be positive")
        if self.k_motor <= 0 or self.omega_max <= 0:
            raise ValueError("k_motor and omega_max must be positive")

    # ---- derived quantities -------------------------------------------------

    @property
    def g_vec(self) -> np.ndarray:
        return np.asarray(self.g, dtype=np.float64)

    @property
    def J_vec(self) -> np.ndarray:
        return np.asarray(self.J, dtype=np.float64)

    @property
    def hover_thrust_norm(self) -> float:
        """Mass-normalized collective thrust that balances gravity [m/s^2]."""
        return -float(self.g[2])

    @property
    def thrust_norm_max(self) -> float:
        """Largest commandable mass-normalized thrust [m/s^2]."""
        return 4.0 * self.f_max / self.m

    def thrust_from_omega(self, omega):
        k2, k1, k0 = self.k_f
        return np.maximum((k2 * omega + k1) * omega + k0, 0.0)

    def omega_from_thrust(self, f):
        """Positive root of the thrust quadratic; valid for f >= 0."""
        k2, k1, k0 = self.k_f
        disc = k1 * k1 + 4.0 * k2 * (np.asarray(f, dtype=np.float64) - k0)
        return (-k1 + np.sqrt(disc)) / (2.0 * k2)

    @property
    def hover_omega(self) -> float:
        return float(self.omega_from_thrust(self.m * self.hover_thrust_norm / 4.0))

    def as_dict(self) -> dict:
        return asdict(self)


# rotor layout: X configuration, order (front-left, front-right, rear-left,
# rear-right); front-left and rear-right spin CCW. A CCW propeller exerts a
# -z reaction torque on the body.
ROTOR_Y_SIGN = np.array([1.0, -1.0, 1.0, -1.0])   # sign of arm y offset
ROTOR_X_SIGN = np.array([1.0, 1.0, -1.0, -1.0])   # sign of arm x offset
ROTOR_SPIN = np.array([-1.0, 1.0, 1.0, -1.0])     # yaw reaction torque sign


def mixer_matrices(params: QuadParams):
    """(A, A_inv) mapping rotor thrusts <-> [total thrust, tau_x, tau_y, tau_z].

    tau_z uses the quadratic-coefficient ratio k_tau2/k_f2 as the
    torque-per-thrust constant, which is exact at zero linear/constant terms.
    """
    ell = params.r_arm / np.sqrt(2.0)
    kappa = params.k_tau[0] / params.k_f[0]
    A = np.stack([
        np.ones(4),
        ell * ROTOR_Y_SIGN,
        -ell * ROTOR_X_SIGN,
        kappa * ROTOR_SPIN,
    ])
    return A, np.linalg.inv(A)


PRESETS = {
    "vis-h": QuadParams(m=0.47, J=(1.25e-3, 1.28e-3, 2.03e-3)),
    "vis-r": QuadParams(m=0.75, J=(1.41e-3, 1.53e-3, 2.05e-3)),
}


def get_params(preset_or_dict) -> QuadParams:
    """Resolve a preset name or a plain dict into QuadParams."""
    if isinstance(preset_or_dict, QuadParams):
        return preset_or_dict
    if isinstance(preset_or_dict, str):
        try:
            return PRESETS[preset_or_dict]
        except KeyError:
            raise ValueError(f"unknown quad preset {preset_or_dict!r}; "
                             f"available: {sorted(PRESETS)}") from None
    fields = dict(preset_or_dict)
    for key in ("J", "k_f", "k_tau", "k_drag", "k_omega_damp", "kp_omega", "g"):
        if key in fields:
            fields[key] = tuple(fields[key])
    return QuadParams(**fields)
