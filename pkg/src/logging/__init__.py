"""
Logging module
"""
