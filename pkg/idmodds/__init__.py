"""
idm-odds: prevalence odds, current-status simulation and maximum likelihood
estimation for the illness-death model of chronic diseases.
"""

__version__ = "1.0.0"
