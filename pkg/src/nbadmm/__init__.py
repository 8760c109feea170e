"""ADMM linear-programming and penalized decoding of non-binary LDPC codes over GF(2^m)."""

__version__ = "0.1.0"
