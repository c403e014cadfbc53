"""Deterministic artifact helpers: stable JSON, fingerprints and run manifests."""
