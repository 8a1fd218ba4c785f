"""
Meixner toolkit - Main package
"""
