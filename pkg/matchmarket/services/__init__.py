"""
Services: simulation, regret accounting, summaries and analytic bounds.
"""
