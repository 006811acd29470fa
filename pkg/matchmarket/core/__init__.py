"""
Estimation, ranking, Gale-Shapley and change-detection primitives.
"""
