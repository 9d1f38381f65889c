"""Erasure-channel coding toolkit.

Finite-field arithmetic, Reed-Solomon and random codes with erasure decoders,
exact maximum-likelihood analysis of small codebooks, error exponents and
tail bounds, and seeded Monte Carlo campaigns.
"""

from .galois import FieldSpec, field_of_order, make_field
from .codecs import CodeParams, Codebook, ReedSolomon, rs_code
from .channel import GilbertElliott, Memoryless, parse_channel

__version__ = "0.1.0"

__all__ = [
    "FieldSpec", "field_of_order", "make_field",
    "CodeParams", "Codebook", "ReedSolomon", "rs_code",
    "GilbertElliott", "Memoryless", "parse_channel",
]
