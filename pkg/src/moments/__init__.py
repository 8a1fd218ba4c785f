"""
Moments module
"""
