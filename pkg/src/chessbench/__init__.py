"""Chess rules, notation and benchmark tooling for evaluating language models on chess."""

__version__ = "0.1.0"
