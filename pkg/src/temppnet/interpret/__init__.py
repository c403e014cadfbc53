"""Prototype sources, importance scores and interpretation reports."""
