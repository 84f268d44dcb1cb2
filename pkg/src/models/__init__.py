"""Equations, datasets, settings and stored experiment runs"""
