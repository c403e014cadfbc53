"""Synthetic corpus generator with planted gait trends."""
