"""Handcrafted gait features and the reference classifiers built on them."""
