"""TempPNet: CNN encoder, symptom and trend prototypes, classification and training."""
