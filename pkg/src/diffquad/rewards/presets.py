"""Per-task reward presets.

Weights follow the published per-task parameter tables; tasks trained with
the gradient-based optimizer use the fully differentiable compositions,
while the PPO obstacle-racing composition keeps its sparse goal/crash
terms. A spec is just data — override any of it from the run config.
"""

from __future__ import annotations

from .spec import RewardSpec, RewardTerm


def _spec(*entries) -> RewardSpec:
    return RewardSpec([RewardTerm(term=t, weight=w, params=dict(p)) for t, w, p in entries])


_HOVER = (("prog2", 0.01, ()), ("ori2", 0.0001, ()), ("v1", 0.002, ()),
          ("anglev", 0.002, ()))
_LANDING = (("progxy", 0.04, ()), ("vz", 0.1, (("alpha", 0.3), ("v_min", 0.1), ("v_max", 1.0))),
            ("anglev", 0.001, ()))
_TRACKING = (("prog2", 0.02, ()), ("ori2", 0.001, ()), ("v1", 0.002, ()),
             ("anglev", 0.002, ()))
_RACING = (("prog1", 0.9, ()), ("ori2", 0.001, ()), ("v1", 0.002, ()),
           ("anglev", 0.002, ()))
_VISUAL_LANDING = (("progxy", 0.04, ()), ("ori2", 0.003, ()),
                   ("vz", 0.1, (("alpha", 0.3), ("v_min", 0.1), ("v_max", 1.0))),
                   ("anglev", 0.001, ()))
_RACING_OBST_PPO = (("prog1", 0.9, ()), ("act", 0.025, (("weight_du", 0.002),)),
                    ("ori1", 0.04, ()), ("avoid1", 0.01, (("b", 0.1),)),
                    ("goal", 5.0, ()), ("crash", 4.0, ()))
_RACING_OBST_BPTT = (("prog1", 0.9, ()), ("ori1", 0.04, ()), ("v1", 0.002, ()),
                     ("anglev", 0.002, ()), ("avoid1", 0.01, (("b", 0.1),)))

_PRESETS = {
    ("hover", "bptt"): _HOVER,
    ("hover", "ppo"): _HOVER,
    ("landing", "bptt"): _LANDING,
    ("landing", "ppo"): _LANDING,
    ("tracking", "bptt"): _TRACKING,
    ("tracking", "ppo"): _TRACKING,
    ("racing", "bptt"): _RACING,
    ("racing", "ppo"): _RACING,
    ("visual_landing", "bptt"): _VISUAL_LANDING,
    ("visual_landing", "ppo"): _VISUAL_LANDING,
    ("racing_obstacles", "bptt"): _RACING_OBST_BPTT,
    ("racing_obstacles", "ppo"): _RACING_OBST_PPO,
}


def default_reward_spec(task: str, algo: str) -> RewardSpec:
    try:
        return _spec(*_PRESETS[(task, algo)])
    except KeyError:
        raise ValueError(f"no reward preset for task={task!r}, algo={algo!r}") from None
