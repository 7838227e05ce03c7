"""
Monte Carlo simulator for multi-user MIMO downlink schemes driven by
outdated channel state information.

Modules
-------
channel
    Block-fading channel draws and Gauss-Markov evolution.
csi
    Pilot training, analog feedback and cross estimates.
mat
    Two-user retrospective interference alignment, trained-rate bound and
    K-user slot accounting.
lzfb
    Zero-forcing beamforming baseline with delayed CSIT.
sched
    MAT-session and packet-centric schedulers.
harness
    Experiment configuration, sweeps, statistics and the CLI.
"""

from ._linalg import NumericError, log2det, mutual_information
from .channel import ChannelMatrix, DimensionError, GaussMarkovModel, make_rng

__version__ = "0.1.0"

__all__ = [
    "ChannelMatrix",
    "DimensionError",
    "GaussMarkovModel",
    "NumericError",
    "log2det",
    "make_rng",
    "mutual_information",
]
