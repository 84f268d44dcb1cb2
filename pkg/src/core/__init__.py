"""Equation search, constant fitting, data encoding and experiments"""
