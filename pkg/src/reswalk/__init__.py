"""Lattice walkers with current reservoirs and their free-boundary scaling limit.

The package has two halves that meet in the middle:

* an exact event-driven simulator for particles on {0..N} performing
  independent symmetric random walks (reflecting ends), with injection at
  site 0 and removal at the rightmost occupied site, both at rate j/N;
* a deterministic solver for the macroscopic bracketing flows built from a
  Neumann heat kernel on [0,1] and a mass cut-and-paste step, refined over a
  dyadic time-step ladder until upper and lower flows pinch the limit.

``reswalk.harness`` ties both together: micro/macro comparison runs and the
acceptance suite (``reswalk accept`` on the command line).
"""

from reswalk.profiles import MacroProfile, MacroParams
from reswalk.kernel import kernel_value, convolve
from reswalk.barriers import (
    cut_and_paste,
    barrier_step,
    barrier_evolve,
    separating_element,
    explicit_no_edge,
)
from reswalk.clocks import ClockBundle
from reswalk.simulate import Configuration, SimParams

__all__ = [
    "MacroProfile",
    "MacroParams",
    "kernel_value",
    "convolve",
    "cut_and_paste",
    "barrier_step",
    "barrier_evolve",
    "separating_element",
    "explicit_no_edge",
    "ClockBundle",
    "Configuration",
    "SimParams",
]

__version__ = "0.1.0"
