"""Exact finite-window models of matrix KP theory, the Sato Grassmannian and Hitchin spectral data."""
