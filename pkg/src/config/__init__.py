"""
Configuration module
"""