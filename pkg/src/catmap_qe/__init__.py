"""Log-scale quantum ergodicity experiments for quantized cat maps on theta-function spaces."""

__version__ = "0.1.0"
