"""Flight control workbench: nonlinear airframe, three-loop autopilot,
LQR gain-scheduling baseline, and a DDPG agent that learns the gains."""

from . import airframe, autopilot, config, ddpg, envmdp, harness, neuralnet

__all__ = ["airframe", "autopilot", "config", "ddpg", "envmdp", "harness",
           "neuralnet"]
__version__ = "0.1.0"
