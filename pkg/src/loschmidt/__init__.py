"""Loschmidt-amplitude time-series simulation of the Fermi-Hubbard model."""
