"""netgym: gym-style RL environments over a deterministic network simulator.

Environments live entirely inside simulation scenarios and are served to
agents over a length-prefixed TCP request/reply protocol; agents interact
through the usual make / reset / step / close loop.
"""

from .bridge import (
    EnvHooks,
    EnvServer,
    EpisodeDriver,
    EventBased,
    LocalEnv,
    StepResult,
    TimeBased,
)
from .client import RemoteEnv, StartupError, make
from .envs import EnvSettings, InterferencePatternEnv, LinearMeshEnv, make_driver
from .sim import Engine, RngStream
from .spaces import (
    Box,
    BoxValue,
    DictSpace,
    DictValue,
    Discrete,
    DiscreteValue,
    TupleSpace,
    TupleValue,
    conforms,
    flat_len,
    sample,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoxValue",
    "DictSpace",
    "DictValue",
    "Discrete",
    "DiscreteValue",
    "Engine",
    "EnvHooks",
    "EnvServer",
    "EnvSettings",
    "EpisodeDriver",
    "EventBased",
    "InterferencePatternEnv",
    "LinearMeshEnv",
    "LocalEnv",
    "RemoteEnv",
    "RngStream",
    "StartupError",
    "StepResult",
    "TimeBased",
    "TupleSpace",
    "TupleValue",
    "conforms",
    "flat_len",
    "make",
    "make_driver",
    "sample",
    "__version__",
]
