"""
Input helpers
"""
