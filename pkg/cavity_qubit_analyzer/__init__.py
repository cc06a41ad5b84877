"""
Cavity-coupled color-center qubit analyzer.
"""

__version__ = "0.1.0"
