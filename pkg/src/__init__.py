"""Relative entropy orbit explorer - numerical checks of entropic inequalities on two qubits."""

__version__ = "0.1.0"
