"""Covariance algebras of partial automorphisms of finite-dimensional C*-algebras."""

__version__ = "0.1.0"
