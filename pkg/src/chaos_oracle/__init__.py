"""
Chaos oracle module
"""
