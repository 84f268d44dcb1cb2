"""Constants, errors and formatting helpers"""
