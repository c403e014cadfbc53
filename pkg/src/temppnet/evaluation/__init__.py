"""Classification metrics, the economic-benefit calculator and experiment tables."""
