from .network import (PolicyValueNet, cnn_encode, init_cnn, init_mlp, mlp_forward,
                      orthogonal, LOG_STD_MIN, LOG_STD_MAX)
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint

__all__ = ["PolicyValueNet", "cnn_encode", "init_cnn", "init_mlp", "mlp_forward",
           "orthogonal", "LOG_STD_MIN", "LOG_STD_MAX", "CheckpointError",
           "load_checkpoint", "save_checkpoint"]
