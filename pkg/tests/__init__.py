"""Topview renderer test suite."""
