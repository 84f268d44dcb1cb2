"""
edc-classifier - Symbolic binary classification by equation discovery
"""

__version__ = "1.0.0"
__author__ = "edc-classifier"
