"""Extremum seeking through an Euler-Bernoulli beam.

The static map is measured at the free end of a beam actuated at the other
end; a backstepping boundary law, built on a Schrödinger-form representation
of the beam, compensates the PDE dynamics while a sinusoidal dither provides
gradient and Hessian estimates.
"""

from .beam import BeamMesh, BeamState, MapConfig, NewmarkBeam
from .controller import EsController, EsGains, compute_U, estimate, lowpass_step
from .dither import DitherParams, eval_R, eval_S
from .kelvin import kelvin1
from .kernels import KernelTable, build_kernel_table, eval_kappa
from .sim import ConfigError, RunSummary, SimConfig, load_config, parse_config, run
from .spectrum import SpectrumReport, target_spectrum

__version__ = "0.1.0"
