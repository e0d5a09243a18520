"""Discrete quadratic models compiled to binary form via one-hot or domain-wall
encodings, embedded on Chimera hardware graphs and sampled classically."""
from dqmforge.encode import EncodeOptions, PenaltyMode, decode, encode, encode_assignment
from dqmforge.errors import ConfigError, DqmError, EmbeddingError, InputError, SearchSpaceError
from dqmforge.model import BinaryModel, DiscreteModel, Encoding, Vartype, dqm_energy, to_binary, to_spin
from dqmforge.sample import SamplerParams, anneal, solve_exact

__version__ = "0.1.0"

__all__ = [
    "BinaryModel",
    "DiscreteModel",
    "Encoding",
    "Vartype",
    "dqm_energy",
    "to_spin",
    "to_binary",
    "EncodeOptions",
    "PenaltyMode",
    "encode",
    "decode",
    "encode_assignment",
    "SamplerParams",
    "anneal",
    "solve_exact",
    "DqmError",
    "InputError",
    "ConfigError",
    "EmbeddingError",
    "SearchSpaceError",
]
