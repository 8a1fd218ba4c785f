"""
Command-line module
"""
