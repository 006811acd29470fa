"""
Matching Market - decentralized bandit learning in two-sided matching markets
with linear contextual rewards and latent environments.
"""

__version__ = "1.0.0"
__author__ = "Matching Market Team"
