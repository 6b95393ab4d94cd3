"""Numerical workbench for twisted spectral triples."""
