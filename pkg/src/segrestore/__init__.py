"""Denoising autoencoder that restores a missing drift-chamber segment.

A track is six mean wire positions, one per super-layer. One position is
zeroed and a 6-12-6-12-6 sigmoid network trained on corrupted/clean pairs
fills it back in.
"""

from .dataset import CorruptedPair, NormSpec, PairArrays, Scheme, build_pairs, split
from .evaluation import EvalReport, evaluate, infer_missing
from .nncore import CANONICAL_DIMS, DenseLayer, DenseNetwork, GradientSet, init_network
from .trackgen import GenConfig, gen_dataset
from .train import TrainConfig, TrainReport, load_model, save_model, train

__version__ = "0.1.0"
