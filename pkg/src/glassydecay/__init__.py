"""Exponential energy decay for evolution equations with glassy memory."""
