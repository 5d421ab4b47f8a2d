"""Quantum autoencoders for quantum error correction, simulated with dense density matrices."""

__version__ = "0.1.0"
