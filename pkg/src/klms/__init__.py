"""Bounded-reward bandit laboratory.

KL Maillard sampling and baseline policies with exact closed-form action
probabilities, a seeded regret-simulation harness, and an inverse
propensity weighting pipeline for offline policy evaluation on the
resulting logs.
"""

__version__ = "0.1.0"
