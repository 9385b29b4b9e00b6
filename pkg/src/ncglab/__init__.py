"""Finite-truncation laboratory for cyclic Chern characters and higher index formulas."""
