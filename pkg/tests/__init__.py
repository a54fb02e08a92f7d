"""
Tests for ht-quadrature.
"""
