"""
Integrability module
"""
