"""diffquad: differentiable quadrotor simulation and policy training."""

__version__ = "0.1.0"
