"""Test suite for Pyramids Journal trading bot."""
